//! Executes one configured run and writes its CSV trace.

use crate::config::{InstanceSource, Method, RunConfig};
use crate::error::HarnessError;
use pdbundle::game::{uniform, GameInstance, LinearPlusLinf, SimplexIndicator};
use pdbundle::oracle::{Composite, ConjugateOracle, SubgradientOracle};
use pdbundle::pdcp::{certificate_value, prox_objective};
use pdbundle::pdpb::{pdpb_run, pds_run, PdpbConfig};
use pdbundle::saddle::{cs_spp_run, pb_spp_run, CsConfig, PbConfig, SaddleProblem, SppLogEntry};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CSV_HEADER: [&str; 7] =
    ["method", "outer_iter", "total_inner_iters", "prox_evals", "oracle_calls", "elapsed_seconds", "gap"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub outer_iter: usize,
    pub total_inner_iters: usize,
    pub prox_evals: usize,
    pub oracle_calls: usize,
    pub elapsed_seconds: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    /// The final gap is at most `eps_bar`.
    pub reached_target: bool,
}

pub fn load_instance(source: &InstanceSource) -> Result<GameInstance, HarnessError> {
    match source {
        InstanceSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            GameInstance::from_text(&text).map_err(HarnessError::Instance)
        }
        InstanceSource::Generate(g) => {
            GameInstance::generate(g.m, g.n, g.density, g.gamma_x, g.gamma_y, g.seed).map_err(HarnessError::Instance)
        }
    }
}

/// The composite problem used by the single-player methods: the game's
/// x-slice against the uniform mixed strategy of the row player.
pub fn column_problem(game: &GameInstance) -> (LinearPlusLinf, SimplexIndicator) {
    (game.slice_x(&uniform(game.m())), SimplexIndicator { n: game.n() })
}

pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutcome, HarnessError> {
    let game = load_instance(&cfg.instance)?;
    run_on(&game, cfg)
}

pub fn run_on(game: &GameInstance, cfg: &RunConfig) -> Result<RunOutcome, HarnessError> {
    let method = cfg.method.to_string();
    let spp_row = |e: &SppLogEntry| RunRecord {
        method: method.clone(),
        outer_iter: e.outer_iter,
        total_inner_iters: e.total_inner_iters,
        prox_evals: e.prox_calls,
        oracle_calls: e.oracle_calls,
        elapsed_seconds: e.elapsed_seconds,
        gap: e.gap,
    };
    let (x0, y0) = (uniform(game.n()), uniform(game.m()));
    let mm = game.lipschitz();

    let records = match cfg.method {
        Method::CsSpp => {
            let mut c = CsConfig::for_tolerance(cfg.eps_bar, mm);
            if let Some(l) = cfg.lambda {
                c.lambda = l;
            }
            c.max_iters = cfg.max_iters;
            c.log_every = cfg.log_every;
            cs_spp_run(game, &x0, &y0, &c)?.log.iter().map(spp_row).collect()
        }
        Method::PbSpp(scheme) => {
            let mut c = PbConfig::new(cfg.eps_bar, mm, game.diameter(), scheme);
            if let Some(l) = cfg.lambda1 {
                c.lambda1 = l;
            }
            c.max_outer = cfg.max_iters;
            c.log_every = cfg.log_every;
            c.improved = cfg.improved;
            c.parallel = cfg.parallel;
            pb_spp_run(game, &x0, &y0, &c)?.log.iter().map(spp_row).collect()
        }
        Method::Pdpb => {
            let (f, h) = column_problem(game);
            let lambda = cfg.lambda.unwrap_or_else(|| default_column_lambda(&h, mm));
            let mut c = PdpbConfig::new(lambda, cfg.eps_bar);
            c.max_cycles = cfg.max_iters;
            c.gap_target = Some(cfg.eps_bar);
            let st = pdpb_run(&f, &h, &x0, &c, Some(&f))?;
            let mut rows = vec![initial_row(&method, &f, &h, &x0)?];
            let (mut inner, mut prox, mut oracle) = (0, 0, 0);
            let last = st.cycles.len();
            for (i, (cycle, (_, gap))) in st.cycles.iter().zip(&st.gap_history).enumerate() {
                inner += cycle.iters;
                prox += cycle.prox_calls;
                oracle += cycle.oracle_calls;
                let k = i + 1;
                if k % cfg.log_every == 0 || k == last {
                    rows.push(RunRecord {
                        method: method.clone(),
                        outer_iter: k,
                        total_inner_iters: inner,
                        prox_evals: prox,
                        oracle_calls: oracle,
                        elapsed_seconds: cycle.elapsed_seconds,
                        gap: *gap,
                    });
                }
            }
            rows
        }
        Method::Pds => {
            let (f, h) = column_problem(game);
            let lambda = cfg.lambda.unwrap_or(cfg.eps_bar / (16.0 * mm * mm));
            let r = pds_run(&f, &h, &x0, lambda, cfg.max_iters, Some(&f), cfg.log_every, Some(cfg.eps_bar))?;
            let mut rows = vec![initial_row(&method, &f, &h, &x0)?];
            rows.extend(r.gap_trace.iter().zip(&r.gap_seconds).map(|(&(k, gap), &secs)| RunRecord {
                method: method.clone(),
                outer_iter: k,
                total_inner_iters: k,
                prox_evals: k,
                oracle_calls: k,
                elapsed_seconds: secs,
                gap,
            }));
            rows
        }
        Method::Cg(rule) => {
            let (f, h) = column_problem(game);
            let lambda = cfg.lambda.unwrap_or_else(|| default_column_lambda(&h, mm));
            let tr = pdbundle::cg::cg_run_until(&f, &h, &x0, lambda, cfg.max_iters, rule, Some(&f), Some(cfg.eps_bar))?;
            let mut rows = vec![initial_cg_row(&method, &f, &h, &x0, lambda)?];
            let last = tr.iterates.len();
            for (i, it) in tr.iterates.iter().enumerate() {
                let j = i + 1;
                if j % cfg.log_every == 0 || j == last {
                    rows.push(RunRecord {
                        method: method.clone(),
                        outer_iter: j,
                        total_inner_iters: j,
                        prox_evals: it.prox_calls,
                        oracle_calls: it.oracle_calls,
                        elapsed_seconds: it.elapsed_seconds,
                        gap: it.wolfe.value,
                    });
                }
            }
            rows
        }
    };
    let reached_target = records.last().is_some_and(|r: &RunRecord| r.gap <= cfg.eps_bar);
    Ok(RunOutcome { records, reached_target })
}

/// Diameter of the simplex over the Lipschitz bound.
fn default_column_lambda(h: &SimplexIndicator, lipschitz: f64) -> f64 {
    h.diameter().filter(|d| *d > 0.0).unwrap_or(1.0) / lipschitz
}

/// Gap of the pair `(x0, f'(x0))`: `f(x0) + h(x0) + f*(f'(x0)) + h*(-f'(x0))`.
fn initial_row(
    method: &str,
    f: &LinearPlusLinf,
    h: &SimplexIndicator,
    x0: &[f64],
) -> Result<RunRecord, HarnessError> {
    let s = f.subgradient(x0);
    let neg: Vec<f64> = s.iter().map(|v| -v).collect();
    let conj = f
        .conjugate(&s)
        .finite()
        .ok_or_else(|| pdbundle::Error::InfeasibleDual("initial subgradient outside dom f*".into()))?;
    let support = h.domain_support(&neg).expect("the simplex is bounded");
    let gap = f.value(x0) + conj + support;
    Ok(RunRecord {
        method: method.to_string(),
        outer_iter: 0,
        total_inner_iters: 0,
        prox_evals: 0,
        oracle_calls: 0,
        elapsed_seconds: 0.0,
        gap,
    })
}

/// Prox-subproblem gap of the pair `(x0, f'(x0))`.
fn initial_cg_row(
    method: &str,
    f: &LinearPlusLinf,
    h: &SimplexIndicator,
    x0: &[f64],
    lambda: f64,
) -> Result<RunRecord, HarnessError> {
    let phi = prox_objective(f, h, x0, lambda, x0)?;
    let gap = certificate_value(phi, &f.subgradient(x0), f, h, x0, lambda)?;
    Ok(RunRecord {
        method: method.to_string(),
        outer_iter: 0,
        total_inner_iters: 0,
        prox_evals: 0,
        oracle_calls: 0,
        elapsed_seconds: 0.0,
        gap,
    })
}

pub fn write_csv(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_records(file, records)
}

pub fn write_records<W: std::io::Write>(w: W, records: &[RunRecord]) -> Result<(), HarnessError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|e| HarnessError::Io { path: "csv output".into(), source: e })?;
    Ok(())
}
