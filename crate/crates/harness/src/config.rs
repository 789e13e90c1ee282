//! Run configuration: a flat `key = value` file with command-line overrides.

use crate::error::HarnessError;
use pdbundle::bundle::Scheme;
use pdbundle::cg::StepRule;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Directory used for run outputs when no explicit path is given.
pub const OUT_DIR_ENV: &str = "PDBUNDLE_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    CsSpp,
    PbSpp(Scheme),
    Pdpb,
    Pds,
    Cg(StepRule),
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let cg_rule = |r: &str| match r {
            "open-loop" => Some(StepRule::OpenLoop),
            "adaptive" => Some(StepRule::Adaptive),
            "line-search" => Some(StepRule::LineSearch),
            _ => None,
        };
        let m = match s {
            "cs-spp" => Method::CsSpp,
            "pb-spp-1cut" => Method::PbSpp(Scheme::OneCut),
            "pb-spp-2cut" => Method::PbSpp(Scheme::TwoCuts),
            "pdpb" => Method::Pdpb,
            "pds" => Method::Pds,
            _ => {
                if let Some(k) = s
                    .strip_prefix("pb-spp-multicut-")
                    .or_else(|| s.strip_prefix("pb-spp-multicut(").and_then(|r| r.strip_suffix(')')))
                {
                    let max_cuts: usize = k.parse().map_err(|_| format!("bad cut count in `{s}`"))?;
                    Method::PbSpp(Scheme::MultiCuts { max_cuts })
                } else if let Some(rule) = s
                    .strip_prefix("cg-")
                    .or_else(|| s.strip_prefix("cg(").and_then(|r| r.strip_suffix(')')))
                    .and_then(cg_rule)
                {
                    Method::Cg(rule)
                } else {
                    return Err(format!("unknown method `{s}`"));
                }
            }
        };
        Ok(m)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::CsSpp => write!(f, "cs-spp"),
            Method::PbSpp(Scheme::OneCut) => write!(f, "pb-spp-1cut"),
            Method::PbSpp(Scheme::TwoCuts) => write!(f, "pb-spp-2cut"),
            Method::PbSpp(Scheme::MultiCuts { max_cuts }) => write!(f, "pb-spp-multicut-{max_cuts}"),
            Method::Pdpb => write!(f, "pdpb"),
            Method::Pds => write!(f, "pds"),
            Method::Cg(StepRule::OpenLoop) => write!(f, "cg-open-loop"),
            Method::Cg(StepRule::Adaptive) => write!(f, "cg-adaptive"),
            Method::Cg(StepRule::LineSearch) => write!(f, "cg-line-search"),
        }
    }
}

/// Parameters of a generated game instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub m: usize,
    pub n: usize,
    pub density: f64,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { m: 100, n: 100, density: 0.05, gamma_x: 0.05, gamma_y: 0.05, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    File(PathBuf),
    Generate(GenParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub instance: InstanceSource,
    pub eps_bar: f64,
    /// Constant stepsize (cs-spp, pdpb, pds, cg); defaults depend on the method.
    pub lambda: Option<f64>,
    /// First stepsize of pb-spp; defaults to `D / (4M)`.
    pub lambda1: Option<f64>,
    pub log_every: usize,
    pub max_iters: usize,
    pub improved: bool,
    pub parallel: bool,
    pub output: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "method", "instance", "m", "n", "density", "gamma_x", "gamma_y", "seed", "eps_bar", "lambda",
    "lambda1", "log_every", "max_iters", "improved", "parallel", "output",
];

/// Raw settings in application order: file first, then overrides.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Blank lines and `#` comments are skipped.
    pub fn parse_str(text: &str) -> Result<Self, HarnessError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::config_at(i + 1, format!("expected key = value, got `{line}`")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(HarnessError::config_at(i + 1, format!("unknown key `{key}`")));
            }
            s.values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        debug_assert!(KEYS.contains(&key), "unknown key {key}");
        self.values.insert(key.to_string(), value.to_string());
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, HarnessError>
    where
        T::Err: fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| HarnessError::config(format!("field `{key}`: cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn into_config(self) -> Result<RunConfig, HarnessError> {
        let method: Method = self
            .get("method")?
            .ok_or_else(|| HarnessError::config("field `method` is required"))?;
        let instance = match self.values.get("instance") {
            Some(path) => InstanceSource::File(PathBuf::from(path)),
            None => {
                let d = GenParams::default();
                InstanceSource::Generate(GenParams {
                    m: self.get("m")?.unwrap_or(d.m),
                    n: self.get("n")?.unwrap_or(d.n),
                    density: self.get("density")?.unwrap_or(d.density),
                    gamma_x: self.get("gamma_x")?.unwrap_or(d.gamma_x),
                    gamma_y: self.get("gamma_y")?.unwrap_or(d.gamma_y),
                    seed: self.get("seed")?.unwrap_or(d.seed),
                })
            }
        };
        let cfg = RunConfig {
            method,
            instance,
            eps_bar: self.get("eps_bar")?.unwrap_or(1e-4),
            lambda: self.get("lambda")?,
            lambda1: self.get("lambda1")?,
            log_every: self.get("log_every")?.unwrap_or(match method {
                Method::CsSpp | Method::Pds => 1000,
                _ => 10,
            }),
            max_iters: self.get::<f64>("max_iters")?.map(|v| v as usize).unwrap_or(match method {
                Method::CsSpp | Method::Pds => 100_000_000,
                Method::PbSpp(_) => 10_000_000,
                Method::Pdpb | Method::Cg(_) => 100_000,
            }),
            improved: self.get("improved")?.unwrap_or(false),
            parallel: self.get("parallel")?.unwrap_or(false),
            output: self.values.get("output").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => {
                Err(HarnessError::config(format!("field `{name}` must be positive, got {v}")))
            }
            _ => Ok(()),
        };
        positive("eps_bar", Some(self.eps_bar))?;
        positive("lambda", self.lambda)?;
        positive("lambda1", self.lambda1)?;
        if self.log_every == 0 {
            return Err(HarnessError::config("field `log_every` must be at least 1"));
        }
        if let InstanceSource::Generate(g) = &self.instance {
            if g.m == 0 || g.n == 0 {
                return Err(HarnessError::config("fields `m` and `n` must be at least 1"));
            }
            if !(g.density > 0.0 && g.density <= 1.0) {
                return Err(HarnessError::config(format!("field `density` must lie in (0, 1], got {}", g.density)));
            }
            if !(g.gamma_x >= 0.0 && g.gamma_y >= 0.0) {
                return Err(HarnessError::config("fields `gamma_x` and `gamma_y` must be nonnegative"));
            }
        }
        if let Method::PbSpp(scheme) = self.method {
            scheme.validate().map_err(|e| HarnessError::config(e.to_string()))?;
            if self.improved && scheme == Scheme::OneCut {
                return Err(HarnessError::config("`improved` needs a two-cut or multi-cut bundle"));
            }
        }
        Ok(())
    }

    /// Explicit output path, else `<PDBUNDLE_OUT_DIR or .>/<method>.csv`.
    pub fn output_path(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| {
            let dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
            dir.join(format!("{}.csv", self.method))
        })
    }
}
