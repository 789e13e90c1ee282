use super::{saddle_gap, SppLogEntry};
use crate::error::{Error, Result};
use crate::saddle::ippf::{ippf_certificate, IppfCertificate, SppStep};
use crate::saddle::SaddleProblem;
use crate::vecops::{dot, running_mean_push, sub};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsConfig {
    pub lambda: f64,
    /// Stop once the averaged pair is an `eps_bar`-saddle point.
    pub eps_bar: Option<f64>,
    pub max_iters: usize,
    /// Gap evaluation and logging cadence.
    pub log_every: usize,
    /// Sample count and seed for per-step certificates.
    pub certify: Option<(usize, u64)>,
}

impl CsConfig {
    /// Constant stepsize `eps_bar / (32 M^2)`.
    pub fn for_tolerance(eps_bar: f64, lipschitz: f64) -> Self {
        CsConfig {
            lambda: eps_bar / (32.0 * lipschitz * lipschitz),
            eps_bar: Some(eps_bar),
            max_iters: usize::MAX,
            log_every: 1000,
            certify: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
    pub iters: usize,
    pub log: Vec<SppLogEntry>,
    pub certificates: Vec<IppfCertificate>,
    pub reached_target: bool,
    pub prox_calls: usize,
    pub oracle_calls: usize,
}

/// Analytic gap bound of the averaged CS-SPP pair after `k` steps.
pub fn cs_spp_gap_bound(lambda: f64, lipschitz: f64, diameter: f64, k: usize) -> f64 {
    16.0 * lambda * lipschitz * lipschitz + diameter * diameter / (2.0 * lambda * k as f64)
}

/// Simultaneous prox-subgradient steps in both players, linearized at the
/// previous pair, with averaged iterates.
pub fn cs_spp_run<P: SaddleProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    y0: &[f64],
    cfg: &CsConfig,
) -> Result<CsResult> {
    if cfg.lambda.is_nan() || cfg.lambda <= 0.0 || cfg.log_every == 0 {
        return Err(Error::Usage("stepsize and log cadence must be positive".into()));
    }
    if !problem.h_x().contains(x0) || !problem.h_y().contains(y0) {
        return Err(Error::Usage("start point outside the domains".into()));
    }
    let started = Instant::now();
    let (mm, dd) = (problem.lipschitz(), problem.diameter());
    let exact = problem.primal_value(x0).is_some() && problem.dual_value(y0).is_some();
    let gap_at = |xb: &[f64], yb: &[f64], k: usize| -> Result<f64> {
        if exact {
            saddle_gap(problem, xb, yb)
        } else {
            Ok(cs_spp_gap_bound(cfg.lambda, mm, dd, k.max(1)))
        }
    };

    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut x_bar = vec![0.0; x.len()];
    let mut y_bar = vec![0.0; y.len()];
    let (mut prox_calls, mut oracle_calls) = (0usize, 0usize);
    let mut log = vec![SppLogEntry {
        outer_iter: 0,
        total_inner_iters: 0,
        prox_calls: 0,
        oracle_calls: 0,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        gap: if exact { saddle_gap(problem, x0, y0)? } else { f64::INFINITY },
        gap_is_exact: exact,
    }];
    let mut certificates = Vec::new();
    let mut rng = cfg.certify.map(|(_, seed)| ChaCha8Rng::seed_from_u64(seed));
    let delta = 8.0 * cfg.lambda * cfg.lambda * mm * mm;
    let mut reached_target = false;
    let mut k = 0usize;

    while k < cfg.max_iters {
        k += 1;
        let gx = problem.grad_x(&x, &y);
        let gy = problem.grad_y(&x, &y);
        oracle_calls += 2;
        let neg_gy: Vec<f64> = gy.iter().map(|v| -v).collect();
        let xn = problem.h_x().prox(&x, &gx, cfg.lambda);
        let yn = problem.h_y().prox(&y, &neg_gy, cfg.lambda);
        prox_calls += 2;

        if let (Some((samples, _)), Some(rng)) = (cfg.certify, rng.as_mut()) {
            let f00 = problem.value(&x, &y);
            let eps_x = problem.value(&xn, &y) - f00 - dot(&gx, &sub(&xn, &x));
            let eps_y = -problem.value(&x, &yn) + f00 + dot(&gy, &sub(&yn, &y));
            let step = SppStep {
                k,
                lambda: cfg.lambda,
                x_prev: x.clone(),
                y_prev: y.clone(),
                x: xn.clone(),
                y: yn.clone(),
                x_tilde: xn.clone(),
                y_tilde: yn.clone(),
                eps_x,
                eps_y,
                delta,
                sigma: 1.0,
            };
            certificates.push(ippf_certificate(problem, &step, samples, rng));
        }

        x = xn;
        y = yn;
        running_mean_push(&mut x_bar, k, &x);
        running_mean_push(&mut y_bar, k, &y);

        if k.is_multiple_of(cfg.log_every) || k == cfg.max_iters {
            let gap = gap_at(&x_bar, &y_bar, k)?;
            log.push(SppLogEntry {
                outer_iter: k,
                total_inner_iters: k,
                prox_calls,
                oracle_calls,
                elapsed_seconds: started.elapsed().as_secs_f64(),
                gap,
                gap_is_exact: exact,
            });
            if cfg.eps_bar.is_some_and(|e| gap <= e) {
                reached_target = true;
                break;
            }
        }
    }
    Ok(CsResult { x, y, x_bar, y_bar, iters: k, log, certificates, reached_target, prox_calls, oracle_calls })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{uniform, GameInstance};

    #[test]
    fn zero_payoff_is_stationary() {
        let g = GameInstance::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]], 0.0, 0.0).unwrap();
        let x0 = vec![0.3, 0.7];
        let y0 = vec![0.6, 0.4];
        let cfg = CsConfig { lambda: 0.1, eps_bar: None, max_iters: 50, log_every: 10, certify: None };
        let r = cs_spp_run(&g, &x0, &y0, &cfg).unwrap();
        assert_eq!(r.x, x0);
        assert_eq!(r.y, y0);
        assert!(r.log.iter().all(|e| e.gap.abs() < 1e-15));
    }

    #[test]
    fn swap_game_converges_to_uniform_value() {
        let g = GameInstance::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]], 0.0, 0.0).unwrap();
        let cfg = CsConfig { lambda: 0.01, eps_bar: Some(1e-3), max_iters: 200_000, log_every: 100, certify: None };
        let r = cs_spp_run(&g, &[0.9, 0.1], &[0.2, 0.8], &cfg).unwrap();
        assert!(r.reached_target);
        let (phi, psi) = g.phi_psi_eval(&r.x_bar, &r.y_bar).unwrap();
        assert!((phi - 0.5).abs() < 1e-3 && (psi - 0.5).abs() < 1e-3);
    }

    #[test]
    fn bilinear_steps_have_zero_eps() {
        let g = GameInstance::generate(5, 4, 0.8, 0.0, 0.0, 3).unwrap();
        let cfg = CsConfig { lambda: 0.05, eps_bar: None, max_iters: 30, log_every: 10, certify: Some((20, 1)) };
        let r = cs_spp_run(&g, &uniform(4), &uniform(5), &cfg).unwrap();
        for c in &r.certificates {
            assert!(c.eps.abs() < 1e-14);
            c.verify().unwrap();
        }
    }

    #[test]
    fn zero_budget_logs_initial_point_only() {
        let g = GameInstance::generate(3, 3, 1.0, 0.05, 0.05, 1).unwrap();
        let cfg = CsConfig { lambda: 0.05, eps_bar: None, max_iters: 0, log_every: 1, certify: None };
        let r = cs_spp_run(&g, &uniform(3), &uniform(3), &cfg).unwrap();
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.log[0].outer_iter, 0);
    }
}
