use super::{saddle_gap, SppLogEntry};
use crate::bundle::Scheme;
use crate::error::{Error, Result};
use crate::oracle::SubgradientOracle;
use crate::pdcp::{pdcp_run, CycleResult, CycleStatus, PdcpConfig, TildeRule};
use crate::saddle::ippf::{ippf_certificate, IppfCertificate, SppStep};
use crate::saddle::SaddleProblem;
use crate::vecops::{dist_sq, dot, running_mean_push, sub};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbConfig {
    pub eps_bar: f64,
    /// Stepsize at `k = 1`; later steps use `λ_1 / sqrt(k)`.
    pub lambda1: f64,
    pub scheme: Scheme,
    /// Stop cycles on the weighted-average gap as well (max-type bundles only).
    pub improved: bool,
    pub tilde_rule: TildeRule,
    pub max_outer: usize,
    /// Exact-gap evaluation cadence; every evaluation can end the run.
    pub check_every: usize,
    pub log_every: usize,
    pub cycle_max_iters: usize,
    /// Run the two player cycles of an outer step on separate threads.
    pub parallel: bool,
    /// Sample count and seed for per-step certificates.
    pub certify: Option<(usize, u64)>,
}

impl PbConfig {
    /// `λ_1 = D / (4M)`.
    pub fn new(eps_bar: f64, lipschitz: f64, diameter: f64, scheme: Scheme) -> Self {
        PbConfig {
            eps_bar,
            lambda1: diameter / (4.0 * lipschitz),
            scheme,
            improved: false,
            tilde_rule: TildeRule::ConvexCombination,
            max_outer: usize::MAX,
            check_every: 1,
            log_every: 10,
            cycle_max_iters: 1_000_000,
            parallel: false,
            certify: None,
        }
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.lambda1 / (k as f64).sqrt()
    }
}

/// Per-outer-step cycle statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    pub k: usize,
    pub lambda: f64,
    pub x_iters: usize,
    pub y_iters: usize,
    pub t_x: f64,
    pub t_y: f64,
    pub first_t_x: f64,
    pub first_t_y: f64,
    pub hat_t_x: Option<f64>,
    pub hat_t_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
    pub outer: usize,
    pub log: Vec<SppLogEntry>,
    pub records: Vec<OuterRecord>,
    pub certificates: Vec<IppfCertificate>,
    pub reached_target: bool,
    pub total_inner_iters: usize,
    pub prox_calls: usize,
    pub oracle_calls: usize,
    pub exhausted_cycles: usize,
}

/// `ε̄/2 + 8 λ_1 M^2 / sqrt(k) + D^2 / (2 λ_1 sqrt(k))`.
pub fn pb_spp_gap_bound(eps_bar: f64, lambda1: f64, lipschitz: f64, diameter: f64, k: usize) -> f64 {
    let rk = (k as f64).sqrt();
    eps_bar / 2.0
        + 8.0 * lambda1 * lipschitz * lipschitz / rk
        + diameter * diameter / (2.0 * lambda1 * rk)
}

/// `ε` of one player's cycle: `p(x̃) - (Γ + h)(x_k) + <x_prev - x_k, x_k - x̃> / λ`.
fn cycle_eps(
    f: &dyn SubgradientOracle,
    center: &[f64],
    lambda: f64,
    r: &CycleResult,
    out: &[f64],
) -> f64 {
    let model_plus_h = r.m - dist_sq(&r.x_last, center) / (2.0 * lambda);
    f.value(out) - model_plus_h + dot(&sub(center, &r.x_last), &sub(&r.x_last, out)) / lambda
}

pub fn pb_spp_run<P: SaddleProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    y0: &[f64],
    cfg: &PbConfig,
) -> Result<PbResult> {
    if !(cfg.eps_bar > 0.0 && cfg.lambda1 > 0.0) || cfg.check_every == 0 || cfg.log_every == 0 {
        return Err(Error::Usage("tolerance, stepsize and cadences must be positive".into()));
    }
    if cfg.improved && !cfg.scheme.keeps_max_structure() {
        return Err(Error::Usage("the improved termination needs two-cut or multi-cut bundles".into()));
    }
    cfg.scheme.validate()?;
    if !problem.h_x().contains(x0) || !problem.h_y().contains(y0) {
        return Err(Error::Usage("start point outside the domains".into()));
    }

    let started = Instant::now();
    let (mm, dd) = (problem.lipschitz(), problem.diameter());
    let exact = problem.primal_value(x0).is_some() && problem.dual_value(y0).is_some();
    // Without exact value functions the analytic bound decides termination;
    // it drops below ε̄ after 64 M^2 D^2 / ε̄^2 steps when λ_1 = D / (4M).
    let gap_at = |xb: &[f64], yb: &[f64], k: usize| -> Result<f64> {
        if exact {
            saddle_gap(problem, xb, yb)
        } else {
            Ok(pb_spp_gap_bound(cfg.eps_bar, cfg.lambda1, mm, dd, k.max(1)))
        }
    };
    let cycle_cfg = PdcpConfig {
        scheme: cfg.scheme,
        epsilon: cfg.eps_bar / 4.0,
        tilde_rule: cfg.tilde_rule,
        max_iters: cfg.cycle_max_iters,
        track_hat: cfg.improved,
        stop_on_hat: cfg.improved,
        ..PdcpConfig::default()
    };

    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut x_bar = vec![0.0; x.len()];
    let mut y_bar = vec![0.0; y.len()];
    let mut totals = (0usize, 0usize, 0usize); // inner iterations, prox calls, oracle calls
    let mut log = vec![SppLogEntry {
        outer_iter: 0,
        total_inner_iters: 0,
        prox_calls: 0,
        oracle_calls: 0,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        gap: if exact { saddle_gap(problem, x0, y0)? } else { f64::INFINITY },
        gap_is_exact: exact,
    }];
    let mut records = Vec::new();
    let mut certificates = Vec::new();
    let mut rng = cfg.certify.map(|(_, seed)| ChaCha8Rng::seed_from_u64(seed));
    let mut exhausted_cycles = 0usize;
    let mut reached_target = false;
    let mut k = 0usize;

    while k < cfg.max_outer {
        k += 1;
        let lambda = cfg.lambda(k);
        let fx = problem.slice_x(&y);
        let fy = problem.slice_y_neg(&x);
        let run_x = || pdcp_run(&fx, problem.h_x(), &x, lambda, &cycle_cfg);
        let run_y = || pdcp_run(&fy, problem.h_y(), &y, lambda, &cycle_cfg);
        let (rx, ry) = if cfg.parallel {
            rayon::join(run_x, run_y)
        } else {
            (run_x(), run_y())
        };
        let (rx, ry) = (rx?, ry?);
        for r in [&rx, &ry] {
            if matches!(r.status, CycleStatus::BudgetExhausted { .. }) {
                exhausted_cycles += 1;
            }
        }
        let (x_out, _) = rx.output();
        let (y_out, _) = ry.output();
        let (x_out, y_out) = (x_out.to_vec(), y_out.to_vec());

        if let (Some((samples, _)), Some(rng)) = (cfg.certify, rng.as_mut()) {
            let step = SppStep {
                k,
                lambda,
                x_prev: x.clone(),
                y_prev: y.clone(),
                x: rx.x_last.clone(),
                y: ry.x_last.clone(),
                x_tilde: x_out.clone(),
                y_tilde: y_out.clone(),
                eps_x: cycle_eps(&fx, &x, lambda, &rx, &x_out),
                eps_y: cycle_eps(&fy, &y, lambda, &ry, &y_out),
                delta: lambda * cfg.eps_bar / 2.0,
                sigma: 0.0,
            };
            certificates.push(ippf_certificate(problem, &step, samples, rng));
        }

        records.push(OuterRecord {
            k,
            lambda,
            x_iters: rx.iters,
            y_iters: ry.iters,
            t_x: rx.t,
            t_y: ry.t,
            first_t_x: rx.first_t(),
            first_t_y: ry.first_t(),
            hat_t_x: rx.hat_t,
            hat_t_y: ry.hat_t,
        });
        totals.0 += rx.iters + ry.iters;
        totals.1 += rx.prox_calls + ry.prox_calls;
        totals.2 += rx.oracle_calls + ry.oracle_calls;
        running_mean_push(&mut x_bar, k, &x_out);
        running_mean_push(&mut y_bar, k, &y_out);
        x = rx.x_last;
        y = ry.x_last;

        let check = k.is_multiple_of(cfg.check_every) || k == cfg.max_outer;
        let logged = k.is_multiple_of(cfg.log_every) || k == cfg.max_outer;
        if check || logged {
            let gap = gap_at(&x_bar, &y_bar, k)?;
            let done = check && gap <= cfg.eps_bar;
            if logged || done {
                log.push(SppLogEntry {
                    outer_iter: k,
                    total_inner_iters: totals.0,
                    prox_calls: totals.1,
                    oracle_calls: totals.2,
                    elapsed_seconds: started.elapsed().as_secs_f64(),
                    gap,
                    gap_is_exact: exact,
                });
            }
            if done {
                reached_target = true;
                break;
            }
        }
    }
    Ok(PbResult {
        x,
        y,
        x_bar,
        y_bar,
        outer: k,
        log,
        records,
        certificates,
        reached_target,
        total_inner_iters: totals.0,
        prox_calls: totals.1,
        oracle_calls: totals.2,
        exhausted_cycles,
    })
}

/// Inner-cycle bound `4MD/(l(l+1)) + 16 λ M^2/(l+1)` for a cycle of length `l`.
pub fn cycle_length_bound(lipschitz: f64, diameter: f64, lambda: f64, l: usize) -> f64 {
    let l = l as f64;
    4.0 * lipschitz * diameter / (l * (l + 1.0)) + 16.0 * lambda * lipschitz * lipschitz / (l + 1.0)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{uniform, GameInstance};

    #[test]
    fn huge_tolerance_stops_at_first_step() {
        let g = GameInstance::generate(6, 6, 0.5, 0.05, 0.05, 2).unwrap();
        let cfg = PbConfig::new(1e3, g.lipschitz(), 2.0, Scheme::OneCut);
        let r = pb_spp_run(&g, &uniform(6), &uniform(6), &cfg).unwrap();
        assert_eq!(r.outer, 1);
        assert!(r.reached_target);
    }

    #[test]
    fn improved_mode_rejects_one_cut() {
        let g = GameInstance::generate(3, 3, 1.0, 0.05, 0.05, 2).unwrap();
        let mut cfg = PbConfig::new(1e-2, g.lipschitz(), 2.0, Scheme::OneCut);
        cfg.improved = true;
        assert!(pb_spp_run(&g, &uniform(3), &uniform(3), &cfg).is_err());
    }

    #[test]
    fn stepsize_schedule() {
        let cfg = PbConfig::new(1e-2, 4.0, 2.0, Scheme::TwoCuts);
        for k in 1..100 {
            assert!((cfg.lambda(k) * (k as f64).sqrt() - cfg.lambda1).abs() <= 1e-15);
        }
    }

    #[test]
    fn small_game_reaches_target_with_certificates() {
        let g = GameInstance::generate(8, 8, 0.5, 0.05, 0.05, 5).unwrap();
        for scheme in [Scheme::OneCut, Scheme::TwoCuts, Scheme::MultiCuts { max_cuts: 5 }] {
            let mut cfg = PbConfig::new(1e-3, g.lipschitz(), 2.0, scheme);
            cfg.certify = Some((10, 3));
            cfg.max_outer = 200_000;
            let r = pb_spp_run(&g, &uniform(8), &uniform(8), &cfg).unwrap();
            assert!(r.reached_target, "{scheme:?}");
            assert!(r.log.last().unwrap().gap <= 1e-3);
            for c in &r.certificates {
                assert!(c.eps >= -1e-10);
                assert!(c.inclusion_residual <= 1e-8, "{scheme:?} {c:?}");
            }
        }
    }

    #[test]
    fn parallel_cycles_match_sequential() {
        let g = GameInstance::generate(7, 9, 0.4, 0.05, 0.05, 12).unwrap();
        let mut cfg = PbConfig::new(1e-3, g.lipschitz(), 2.0, Scheme::TwoCuts);
        cfg.max_outer = 50;
        let a = pb_spp_run(&g, &uniform(9), &uniform(7), &cfg).unwrap();
        cfg.parallel = true;
        let b = pb_spp_run(&g, &uniform(9), &uniform(7), &cfg).unwrap();
        assert_eq!(a.x_bar, b.x_bar);
        assert_eq!(a.y_bar, b.y_bar);
        assert_eq!(a.total_inner_iters, b.total_inner_iters);
    }
}
