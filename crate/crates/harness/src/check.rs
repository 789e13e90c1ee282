//! Batch property suites with a machine-readable report.

use crate::error::HarnessError;
use pdbundle::bundle::Scheme;
use pdbundle::cg::{cg_run, dual_rate_bound, StepRule};
use pdbundle::game::{exact_fz, uniform, GameInstance, LinearPlusLinf, SimplexIndicator};
use pdbundle::oracle::{Composite, SubgradientOracle};
use pdbundle::pdcp::{certificate_value, pdcp_run, rate_bound, PdcpConfig};
use pdbundle::saddle::{cs_spp_run, pb_spp_gap_bound, pb_spp_run, CsConfig, PbConfig, SaddleProblem};
use pdbundle::vecops::{dot, max_abs_diff};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Duality,
    Certificates,
    Rates,
    ExactSolver,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "duality" => Ok(Suite::Duality),
            "certificates" => Ok(Suite::Certificates),
            "rates" => Ok(Suite::Rates),
            "exact-solver" => Ok(Suite::ExactSolver),
            _ => Err(format!("unknown suite `{s}` (duality, certificates, rates, exact-solver)")),
        }
    }
}

/// `a..b` (half open), a comma list, or an empty string for no seeds.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, HarnessError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let bad = |e: std::num::ParseIntError| HarnessError::config(format!("field `seeds`: {e} in `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (a.trim().parse::<u64>().map_err(bad)?, b.trim().parse::<u64>().map_err(bad)?);
        return Ok((a..b).collect());
    }
    s.split(',').map(|t| t.trim().parse::<u64>().map_err(bad)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    /// Largest residual seen; `None` when nothing was checked.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_seed: Option<u64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub check: &'static str,
    pub seed: u64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seeds: Vec<u64>,
    pub max_dim: usize,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub failures: Vec<Failure>,
}

/// Accumulates residuals (bigger is worse) for one named check.
struct Tracker {
    name: &'static str,
    tolerance: f64,
    worst: Option<(f64, u64)>,
    samples: usize,
    failing_seeds: Vec<(u64, f64)>,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tracker { name, tolerance, worst: None, samples: 0, failing_seeds: Vec::new() }
    }

    fn observe(&mut self, seed: u64, residual: f64) {
        self.samples += 1;
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        if self.worst.is_none_or(|(w, _)| residual > w) {
            self.worst = Some((residual, seed));
        }
        if residual > self.tolerance {
            match self.failing_seeds.last_mut() {
                Some((s, r)) if *s == seed => *r = r.max(residual),
                _ => self.failing_seeds.push((seed, residual)),
            }
        }
    }

    fn finish(self, failures: &mut Vec<Failure>) -> CheckResult {
        failures.extend(self.failing_seeds.iter().map(|&(seed, residual)| Failure { check: self.name, seed, residual }));
        CheckResult {
            name: self.name,
            max_residual: self.worst.map(|w| w.0),
            tolerance: self.tolerance,
            passed: self.failing_seeds.is_empty(),
            worst_seed: self.worst.map(|w| w.1),
            samples: self.samples,
        }
    }
}

fn random_simplex_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

struct Subproblem {
    f: LinearPlusLinf,
    h: SimplexIndicator,
    x0: Vec<f64>,
    lambda: f64,
}

fn random_subproblem(rng: &mut ChaCha8Rng, seed: u64, max_dim: usize) -> Subproblem {
    let top = max_dim.max(2);
    let n = rng.random_range(2..=top);
    let m = rng.random_range(2..=top);
    let g = GameInstance::generate(m, n, 0.5, 0.05, 0.05, seed).expect("valid generation parameters");
    let y = random_simplex_point(rng, m);
    Subproblem {
        f: g.slice_x(&y),
        h: SimplexIndicator { n },
        x0: random_simplex_point(rng, n),
        lambda: rng.random_range(0.05..2.0),
    }
}

const SCHEMES: [Scheme; 3] = [Scheme::OneCut, Scheme::TwoCuts, Scheme::MultiCuts { max_cuts: 10 }];

pub fn run_suite(suite: Suite, seeds: &[u64], max_dim: usize) -> Result<SuiteReport, HarnessError> {
    let trackers = match suite {
        Suite::Duality => duality(seeds, max_dim)?,
        Suite::Certificates => certificates(seeds, max_dim)?,
        Suite::Rates => rates(seeds, max_dim)?,
        Suite::ExactSolver => exact_solver(seeds, max_dim),
    };
    let mut failures = Vec::new();
    let checks: Vec<CheckResult> = trackers.into_iter().map(|t| t.finish(&mut failures)).collect();
    Ok(SuiteReport {
        suite,
        seeds: seeds.to_vec(),
        max_dim,
        passed: failures.is_empty(),
        checks,
        failures,
    })
}

fn duality(seeds: &[u64], max_dim: usize) -> Result<Vec<Tracker>, HarnessError> {
    let mut same_dual = Tracker::new("bundle aggregate equals dual iterate", 1e-10);
    let mut prox_map = Tracker::new("primal iterate is prox of dual iterate", 1e-10);
    let mut oracle = Tracker::new("oracle subgradient equals dual direction", 1e-10);
    let mut weights = Tracker::new("dual iterate rebuilt from weights", 1e-12);
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_subproblem(&mut rng, seed, max_dim);
        let cfg = PdcpConfig { epsilon: f64::MIN_POSITIVE, max_iters: 100, record_iterates: true, ..PdcpConfig::default() };
        let bundle = pdcp_run(&p.f, &p.h, &p.x0, p.lambda, &cfg)?;
        let cg = cg_run(&p.f, &p.h, &p.x0, p.lambda, 100, StepRule::OpenLoop, None)?;
        for (b, c) in bundle.iterates.iter().zip(&cg.iterates) {
            same_dual.observe(seed, max_abs_diff(&b.s, &c.z).max(max_abs_diff(&b.x, &c.x)));
            prox_map.observe(seed, max_abs_diff(&p.h.prox(&p.x0, &c.z, p.lambda), &c.x));
            oracle.observe(seed, max_abs_diff(&p.f.subgradient(&c.x), &c.z_bar));
        }
        for j in 1..=cg.iterates.len() {
            weights.observe(seed, max_abs_diff(&cg.reconstruct(j), &cg.iterates[j - 1].z));
        }
    }
    Ok(vec![same_dual, prox_map, oracle, weights])
}

fn certificates(seeds: &[u64], max_dim: usize) -> Result<Vec<Tracker>, HarnessError> {
    let mut cert = Tracker::new("cycle certificate below t", 1e-8);
    let mut wolfe = Tracker::new("Wolfe gap identity", 1e-8);
    let mut estimate = Tracker::new("estimated Wolfe gap above exact", 1e-10);
    let mut cs_incl = Tracker::new("cs-spp inclusion", 1e-8);
    let mut cs_prox = Tracker::new("cs-spp proximity", 1e-8);
    let mut pb_incl = Tracker::new("pb-spp inclusion", 1e-8);
    let mut pb_prox = Tracker::new("pb-spp proximity", 1e-8);
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_subproblem(&mut rng, seed, max_dim);
        for scheme in SCHEMES {
            let cfg = PdcpConfig { scheme, epsilon: 1e-9, max_iters: 500, record_iterates: true, ..PdcpConfig::default() };
            let r = pdcp_run(&p.f, &p.h, &p.x0, p.lambda, &cfg)?;
            for (rec, it) in r.trace.iter().zip(&r.iterates) {
                let c = certificate_value(rec.phi_tilde, &it.s, &p.f, &p.h, &p.x0, p.lambda)?;
                cert.observe(seed, c - rec.t);
            }
        }
        let tr = cg_run(&p.f, &p.h, &p.x0, p.lambda, 100, StepRule::OpenLoop, Some(&p.f))?;
        for it in &tr.iterates {
            let psi = it.psi.expect("conjugate oracle supplied");
            wolfe.observe(seed, (it.wolfe.value - (it.phi_x + psi)).abs());
            estimate.observe(seed, it.wolfe.value - it.wolfe_estimate);
        }

        let top = max_dim.max(2);
        let g = GameInstance::generate(rng.random_range(2..=top), rng.random_range(2..=top), 0.5, 0.05, 0.05, seed)
            .expect("valid generation parameters");
        let (x0, y0) = (uniform(g.n()), uniform(g.m()));
        let mut cs = CsConfig::for_tolerance(1e-2, g.lipschitz());
        cs.eps_bar = None;
        cs.max_iters = 200;
        cs.certify = Some((20, seed));
        for c in cs_spp_run(&g, &x0, &y0, &cs)?.certificates {
            cs_incl.observe(seed, c.inclusion_residual);
            cs_prox.observe(seed, c.proximity_lhs - c.proximity_rhs);
        }
        let mut pb = PbConfig::new(1e-2, g.lipschitz(), g.diameter(), Scheme::TwoCuts);
        pb.max_outer = 200;
        pb.certify = Some((20, seed));
        for c in pb_spp_run(&g, &x0, &y0, &pb)?.certificates {
            pb_incl.observe(seed, c.inclusion_residual);
            pb_prox.observe(seed, c.proximity_lhs - c.proximity_rhs);
        }
    }
    Ok(vec![cert, wolfe, estimate, cs_incl, cs_prox, pb_incl, pb_prox])
}

fn rates(seeds: &[u64], max_dim: usize) -> Result<Vec<Tracker>, HarnessError> {
    let mut cycle = Tracker::new("cycle gap rate", 1e-10);
    let mut hat = Tracker::new("weighted-average gap rate", 1e-10);
    let mut step = Tracker::new("step length bound", 1e-10);
    let mut dual = Tracker::new("open-loop dual rate", 1e-10);
    let mut outer = Tracker::new("pb-spp gap trajectory", 1e-6);
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_subproblem(&mut rng, seed, max_dim);
        let m = p.f.lipschitz_bound();
        for scheme in SCHEMES {
            let improved = scheme.keeps_max_structure();
            let cfg = PdcpConfig { scheme, epsilon: 1e-9, max_iters: 2000, track_hat: improved, ..PdcpConfig::default() };
            let r = pdcp_run(&p.f, &p.h, &p.x0, p.lambda, &cfg)?;
            let t1 = r.first_t();
            for (i, rec) in r.trace.iter().enumerate() {
                let j = i + 1;
                cycle.observe(seed, rec.t - rate_bound(t1, p.lambda, m, j));
                if let Some(ht) = rec.hat_t {
                    hat.observe(seed, ht - 16.0 * p.lambda * m * m / (j as f64 + 1.0));
                }
                if let (true, Some(s)) = (improved, rec.step) {
                    step.observe(seed, s - 2.0 * p.lambda * m);
                }
            }
        }
        let d = p.h.diameter().unwrap_or(0.0);
        let tr = cg_run(&p.f, &p.h, &p.x0, p.lambda, 200, StepRule::OpenLoop, Some(&p.f))?;
        for (i, it) in tr.iterates.iter().enumerate() {
            let lhs = it.phi_u + it.psi.expect("conjugate oracle supplied");
            dual.observe(seed, lhs - dual_rate_bound(m, d, p.lambda, i + 1, 8.0));
        }

        let top = max_dim.max(2);
        let g = GameInstance::generate(rng.random_range(2..=top), rng.random_range(2..=top), 0.5, 0.05, 0.05, seed)
            .expect("valid generation parameters");
        let mut pb = PbConfig::new(1e-2, g.lipschitz(), g.diameter(), Scheme::OneCut);
        pb.max_outer = 500;
        pb.log_every = 1;
        for e in pb_spp_run(&g, &uniform(g.n()), &uniform(g.m()), &pb)?.log.iter().skip(1) {
            let bound = pb_spp_gap_bound(pb.eps_bar, pb.lambda1, g.lipschitz(), g.diameter(), e.outer_iter);
            outer.observe(seed, e.gap - bound);
        }
    }
    Ok(vec![cycle, hat, step, dual, outer])
}

/// `min over nonempty S of (gamma + sum_S z) / |S|`, the simplex minimum of
/// `<z,x> + gamma |x|_inf` by enumeration of supports.
fn fz_by_subsets(z: &[f64], gamma: f64) -> f64 {
    let n = z.len();
    (1u32..(1 << n))
        .map(|mask| {
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| z[i]).sum();
            (gamma + s) / mask.count_ones() as f64
        })
        .fold(f64::INFINITY, f64::min)
}

fn exact_solver(seeds: &[u64], max_dim: usize) -> Vec<Tracker> {
    let mut value = Tracker::new("value equals support enumeration", 1e-12);
    let mut sampled = Tracker::new("value below sampled points", 1e-10);
    let mut shape = Tracker::new("prefix averages unimodal", 1e-12);
    let top = max_dim.clamp(1, 12);
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let n = rng.random_range(1..=top);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let gamma = rng.random_range(0.0..4.0);
            let sol = exact_fz(&z, gamma);
            value.observe(seed, (sol.value - fz_by_subsets(&z, gamma)).abs());
            for _ in 0..1000 {
                let u = random_simplex_point(&mut rng, n);
                let fu = dot(&z, &u) + gamma * u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                sampled.observe(seed, sol.value - fu);
            }
            let mut sorted = z.clone();
            sorted.sort_by(f64::total_cmp);
            let mut prefix = gamma;
            let s: Vec<f64> = sorted
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    prefix += v;
                    prefix / (j + 1) as f64
                })
                .collect();
            let k = sol.support;
            let worst = s
                .windows(2)
                .enumerate()
                .map(|(i, w)| if i + 1 < k { w[1] - w[0] } else { w[0] - w[1] })
                .fold(0.0f64, f64::max);
            shape.observe(seed, worst);
        }
    }
    vec![value, sampled, shape]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_syntax() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4, 9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("").unwrap().is_empty());
        assert!(parse_seeds("a..b").is_err());
    }

    #[test]
    fn empty_seed_list_passes_vacuously() {
        for suite in [Suite::Duality, Suite::Certificates, Suite::Rates, Suite::ExactSolver] {
            let r = run_suite(suite, &[], 10).unwrap();
            assert!(r.passed);
            assert!(r.checks.iter().all(|c| c.samples == 0 && c.max_residual.is_none()));
        }
    }

    #[test]
    fn failures_name_check_and_seed() {
        let mut t = Tracker::new("demo", 1.0);
        t.observe(3, 0.5);
        t.observe(4, 2.0);
        t.observe(4, 3.0);
        let mut failures = Vec::new();
        let r = t.finish(&mut failures);
        assert!(!r.passed);
        assert_eq!(r.worst_seed, Some(4));
        assert_eq!(failures, vec![Failure { check: "demo", seed: 4, residual: 3.0 }]);
    }
}
