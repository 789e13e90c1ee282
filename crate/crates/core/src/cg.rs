//! Conditional gradient on the Fenchel dual of the prox subproblem,
//! `min_z ψ(z) = (h^λ)*(-z) + f*(z)`.
//!
//! The linear minimization oracle never touches `dom f*`: it takes one prox
//! step `x = prox(x0 - λ z)` and returns the primal subgradient `f'(x)`.

use crate::bundle::Scheme;
use crate::error::{Error, Result};
use crate::oracle::{regularized_value, Composite, ConjugateOracle, SubgradientOracle};
use crate::pdcp::{pdcp_run, prox_objective, PdcpConfig, TauRule};
use crate::vecops::{dist, dot, lerp, max_abs_diff};

pub const STATIONARY_TOL: f64 = 1e-14;
pub const GOLDEN_TOL: f64 = 1e-12;
pub const GOLDEN_MAX_PROBES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// `τ_j = j / (j + 2)`
    OpenLoop,
    /// Minimizer of the quadratic upper model of ψ along the segment.
    Adaptive,
    /// Exact minimization of ψ along the segment.
    LineSearch,
}

/// Returns `(f'(x), x)` with `x = prox(x0 - λ z)`.
pub fn lmo_dual(
    f: &dyn SubgradientOracle,
    h: &dyn Composite,
    x0: &[f64],
    lambda: f64,
    z: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let x = h.prox(x0, z, lambda);
    (f.subgradient(&x), x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WolfeGap {
    pub value: f64,
    /// False when `f*(z_j)` was replaced by its convex-combination upper bound.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgIterate {
    pub z: Vec<f64>,
    pub z_bar: Vec<f64>,
    pub x: Vec<f64>,
    /// Primal average `u_j`.
    pub u: Vec<f64>,
    /// Convex weights of `z` over `[z_1, z̄_1, …, z̄_{j-1}]`.
    pub weights: Vec<f64>,
    /// Step used to form `z_{j+1} = τ z_j + (1-τ) z̄_j`.
    pub tau: f64,
    pub phi_x: f64,
    pub phi_u: f64,
    pub wolfe: WolfeGap,
    /// Upper-estimate Wolfe gap, always available.
    pub wolfe_estimate: f64,
    /// `ψ(z_j)`, when a conjugate oracle is present.
    pub psi: Option<f64>,
    /// Running totals at the end of this iteration.
    pub prox_calls: usize,
    pub oracle_calls: usize,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgTrace {
    pub z1: Vec<f64>,
    pub iterates: Vec<CgIterate>,
    pub prox_calls: usize,
    pub oracle_calls: usize,
}

impl CgTrace {
    /// Rebuilds `z_j` from its stored combination weights.
    pub fn reconstruct(&self, j: usize) -> Vec<f64> {
        let it = &self.iterates[j - 1];
        let mut z = crate::vecops::scale(&self.z1, it.weights[0]);
        for (w, prev) in it.weights[1..].iter().zip(&self.iterates) {
            crate::vecops::axpy(&mut z, *w, &prev.z_bar);
        }
        z
    }
}

/// `ψ(z) = (h^λ)*(-z) + f*(z)`, `None` when `z` is outside `dom f*`.
fn psi_at(
    conj: &dyn ConjugateOracle,
    h: &dyn Composite,
    x0: &[f64],
    lambda: f64,
    z: &[f64],
) -> Option<f64> {
    let fs = conj.conjugate(z).finite()?;
    let (hc, _) = crate::oracle::regularized_conjugate_neg(h, x0, lambda, z);
    Some(hc + fs)
}

/// Golden-section search of a convex function on [0, 1]; endpoints are
/// compared at the end so corner minima are never missed.
fn golden_section(mut g: impl FnMut(f64) -> f64) -> (f64, usize) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    let mut probes = 2;
    while b - a > GOLDEN_TOL && probes < GOLDEN_MAX_PROBES - 2 {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
        probes += 1;
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, g(mid));
    for end in [0.0, 1.0] {
        let v = g(end);
        if v < best.1 {
            best = (end, v);
        }
    }
    (best.0, probes + 3)
}

pub fn cg_run(
    f: &dyn SubgradientOracle,
    h: &dyn Composite,
    x0: &[f64],
    lambda: f64,
    iters: usize,
    rule: StepRule,
    f_conj: Option<&dyn ConjugateOracle>,
) -> Result<CgTrace> {
    cg_run_until(f, h, x0, lambda, iters, rule, f_conj, None)
}

/// As [`cg_run`], stopping after the first iterate whose Wolfe gap (exact
/// or estimated) is at most `gap_target`.
#[allow(clippy::too_many_arguments)]
pub fn cg_run_until(
    f: &dyn SubgradientOracle,
    h: &dyn Composite,
    x0: &[f64],
    lambda: f64,
    iters: usize,
    rule: StepRule,
    f_conj: Option<&dyn ConjugateOracle>,
    gap_target: Option<f64>,
) -> Result<CgTrace> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Usage(format!("stepsize must be positive, got {lambda}")));
    }
    if rule == StepRule::LineSearch && f_conj.is_none() {
        return Err(Error::Capability("line-search steps need a conjugate oracle for f"));
    }
    if !h.contains(x0) {
        return Err(Error::Usage("x0 must lie in dom h".into()));
    }

    let started = std::time::Instant::now();
    let (f0, z1) = f.value_and_subgradient(x0);
    let mut oracle_calls = 1usize;
    let mut prox_calls = 0usize;
    // f*(z_1) = <z_1, x0> - f(x0) by Fenchel equality.
    let mut conj_estimate = dot(&z1, x0) - f0;
    let mut z = z1.clone();
    let mut weights = vec![1.0];
    let mut iterates: Vec<CgIterate> = Vec::with_capacity(iters);

    for j in 1..=iters {
        let x = h.prox(x0, &z, lambda);
        prox_calls += 1;
        let (fx, z_bar) = f.value_and_subgradient(&x);
        oracle_calls += 1;
        let hl = regularized_value(h, x0, lambda, &x)
            .ok_or_else(|| Error::Instance("prox output outside dom h".into()))?;
        let phi_x = fx + hl;

        let (u, phi_u) = if j <= 2 {
            let first = iterates.first().map_or(&x, |it| &it.x);
            let phi = iterates.first().map_or(phi_x, |it| it.phi_x);
            (first.clone(), phi)
        } else {
            let prev = &iterates[j - 2];
            let t = TauRule::OpenLoop.tau(j - 1);
            let u = lerp(t, &prev.u, &prev.x);
            oracle_calls += 1;
            let phi = prox_objective(f, h, x0, lambda, &u)?;
            (u, phi)
        };

        let zx = dot(&z, &x);
        let wolfe_estimate = conj_estimate - zx + fx;
        let exact_conj = f_conj.map(|c| c.conjugate(&z).finite());
        let (wolfe, psi) = match exact_conj {
            Some(Some(fs)) => {
                let psi = -zx - hl + fs;
                (WolfeGap { value: fs - zx + fx, exact: true }, Some(psi))
            }
            Some(None) => {
                return Err(Error::InfeasibleDual(format!("dual iterate {j} left dom f*")))
            }
            None => (WolfeGap { value: wolfe_estimate, exact: false }, None),
        };

        let tau = match rule {
            StepRule::OpenLoop => TauRule::OpenLoop.tau(j),
            StepRule::Adaptive => {
                let gap_sq = crate::vecops::dist_sq(&z, &z_bar);
                if gap_sq.sqrt() <= STATIONARY_TOL {
                    1.0
                } else {
                    (1.0 - wolfe.value / (lambda * gap_sq)).max(0.0)
                }
            }
            StepRule::LineSearch => {
                let conj = f_conj.expect("checked above");
                let (beta, probes) = golden_section(|b| {
                    psi_at(conj, h, x0, lambda, &lerp(b, &z, &z_bar)).unwrap_or(f64::INFINITY)
                });
                prox_calls += probes;
                beta
            }
        };

        iterates.push(CgIterate {
            z: z.clone(),
            z_bar: z_bar.clone(),
            x: x.clone(),
            u,
            weights: weights.clone(),
            tau,
            phi_x,
            phi_u,
            wolfe,
            wolfe_estimate,
            psi,
            prox_calls,
            oracle_calls,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        });
        if gap_target.is_some_and(|t| iterates[j - 1].wolfe.value <= t) {
            break;
        }

        z = lerp(tau, &z, &z_bar);
        for w in &mut weights {
            *w *= tau;
        }
        weights.push(1.0 - tau);
        conj_estimate = tau * conj_estimate + (1.0 - tau) * (dot(&z_bar, &x) - fx);
    }
    Ok(CgTrace { z1, iterates, prox_calls, oracle_calls })
}

/// Wolfe gap of the `j`-th recorded iterate (1-based).
pub fn wolfe_gap(trace: &CgTrace, j: usize) -> WolfeGap {
    trace.iterates[j - 1].wolfe.clone()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractRecord {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub z_bar: Vec<f64>,
    pub tilde: Vec<f64>,
    pub phi_tilde: f64,
    pub t: f64,
    /// Number of strictly positive multipliers.
    pub support: usize,
    /// Largest residual among the three verified relations.
    pub residual: f64,
}

/// Runs a bundle cycle with a max-type scheme and publishes the dual
/// iterates carried by its multipliers, checking at every step that
/// `x_j = prox(x0 - λ z_j)`, that the multipliers only load pieces active at
/// `x_j`, and that the oracle returns `z̄_j = f'(x_j)`.
pub fn cg_variant_extract(
    scheme: Scheme,
    f: &dyn SubgradientOracle,
    h: &dyn Composite,
    x0: &[f64],
    lambda: f64,
    iters: usize,
) -> Result<Vec<ExtractRecord>> {
    if scheme == Scheme::OneCut {
        return Err(Error::Usage("extraction is defined for two-cut and multi-cut bundles".into()));
    }
    let cfg = PdcpConfig {
        scheme,
        epsilon: f64::MIN_POSITIVE,
        max_iters: iters.max(1),
        record_iterates: true,
        ..PdcpConfig::default()
    };
    let run = pdcp_run(f, h, x0, lambda, &cfg)?;
    let mut out = Vec::with_capacity(run.iterates.len());
    for (j, (it, rec)) in run.iterates.iter().zip(&run.trace).enumerate() {
        let kkt = dist(&h.prox(x0, &it.s, lambda), &it.x);
        let slack = (it.aggregate_at_x - rec.model_at_x).abs();
        let oracle = max_abs_diff(&f.subgradient(&it.x), &it.subgradient);
        let residual = kkt.max(slack).max(oracle);
        if residual > 1e-6 {
            return Err(Error::Certification { check: "multiplier extraction", iteration: j + 1, residual });
        }
        out.push(ExtractRecord {
            z: it.s.clone(),
            x: it.x.clone(),
            z_bar: it.subgradient.clone(),
            tilde: it.tilde.clone(),
            phi_tilde: rec.phi_tilde,
            t: rec.t,
            support: it.multipliers.iter().filter(|&&w| w > 0.0).count(),
            residual,
        });
    }
    Ok(out)
}

/// Quadratic upper model of ψ along the segment used by the adaptive rule:
/// `ψ(z) - (1-τ) S + (1-τ)^2 λ |z - z̄|^2 / 2`.
pub fn adaptive_model(psi: f64, wolfe: f64, lambda: f64, z: &[f64], z_bar: &[f64], tau: f64) -> f64 {
    let a = 1.0 - tau;
    psi - a * wolfe + 0.5 * a * a * lambda * crate::vecops::dist_sq(z, z_bar)
}

/// Open-loop dual rate bound `8M(3d + λM)/(j(j+1)) + c λ M^2/(j+1)` with the
/// tail constant `c` (8 for the open-loop run, 16 for bundle variants).
pub fn dual_rate_bound(lipschitz: f64, diameter: f64, lambda: f64, j: usize, tail: f64) -> f64 {
    let (m, j) = (lipschitz, j as f64);
    8.0 * m * (3.0 * diameter + lambda * m) / (j * (j + 1.0)) + tail * lambda * m * m / (j + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{AffineFunction, MaxAffine};
    use crate::game::{uniform, GameInstance, LinearPlusLinf, SimplexIndicator};
    use crate::pdcp::PdcpConfig;
    use crate::saddle::SaddleProblem;

    fn subproblem(n: usize, seed: u64) -> (LinearPlusLinf, SimplexIndicator, f64) {
        let g = GameInstance::generate(n, n, 0.6, 0.05, 0.05, seed).unwrap();
        let y = crate::game::project_simplex(
            &(0..n).map(|i| ((i * 7 + 3) % 5) as f64 / 5.0).collect::<Vec<_>>(),
        );
        (g.slice_x(&y), SimplexIndicator { n }, g.lipschitz())
    }

    #[test]
    fn affine_is_stationary() {
        let f = AffineFunction::new(vec![0.2, -0.3, 0.4], 0.0);
        let h = SimplexIndicator { n: 3 };
        for rule in [StepRule::OpenLoop, StepRule::Adaptive, StepRule::LineSearch] {
            let tr = cg_run(&f, &h, &uniform(3), 0.5, 10, rule, Some(&f)).unwrap();
            for it in &tr.iterates {
                assert_eq!(it.z, f.c);
                assert_eq!(it.z_bar, f.c);
            }
        }
    }

    #[test]
    fn first_lmo_is_projection() {
        let (f, h, _) = subproblem(5, 1);
        let x0 = uniform(5);
        let z = f.subgradient(&x0);
        let (_, x) = lmo_dual(&f, &h, &x0, 0.3, &z);
        assert_eq!(x, crate::game::simplex_prox(&x0, &z, 0.3));
    }

    #[test]
    fn open_loop_matches_one_cut_bundle() {
        let (f, h, _) = subproblem(6, 4);
        let x0 = uniform(6);
        let lambda = 0.4;
        let cfg = PdcpConfig { epsilon: f64::MIN_POSITIVE, max_iters: 60, record_iterates: true, ..PdcpConfig::default() };
        let run = pdcp_run(&f, &h, &x0, lambda, &cfg).unwrap();
        let tr = cg_run(&f, &h, &x0, lambda, run.iterates.len(), StepRule::OpenLoop, None).unwrap();
        for (a, b) in run.iterates.iter().zip(&tr.iterates) {
            assert!(max_abs_diff(&a.s, &b.z) <= 1e-10);
            assert!(max_abs_diff(&a.x, &b.x) <= 1e-10);
            assert!(max_abs_diff(&a.subgradient, &b.z_bar) <= 1e-10);
        }
    }

    #[test]
    fn wolfe_identity_and_estimate_order() {
        let (f, h, _) = subproblem(6, 9);
        let x0 = uniform(6);
        for rule in [StepRule::OpenLoop, StepRule::Adaptive, StepRule::LineSearch] {
            let tr = cg_run(&f, &h, &x0, 0.3, 40, rule, Some(&f)).unwrap();
            for (j, it) in tr.iterates.iter().enumerate() {
                let psi = it.psi.unwrap();
                assert!((it.wolfe.value - (it.phi_x + psi)).abs() <= 1e-8);
                assert!(it.wolfe_estimate >= it.wolfe.value - 1e-12);
                assert!(max_abs_diff(&tr.reconstruct(j + 1), &it.z) <= 1e-12);
            }
        }
    }

    #[test]
    fn line_search_needs_conjugate() {
        let (f, h, _) = subproblem(3, 2);
        let err = cg_run(&f, &h, &uniform(3), 0.3, 5, StepRule::LineSearch, None).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
    }

    #[test]
    fn open_loop_rate() {
        let (f, h, m) = subproblem(8, 3);
        let x0 = uniform(8);
        let lambda = 0.2;
        let d = h.diameter().unwrap();
        let tr = cg_run(&f, &h, &x0, lambda, 200, StepRule::OpenLoop, Some(&f)).unwrap();
        for (i, it) in tr.iterates.iter().enumerate() {
            let lhs = it.phi_u + it.psi.unwrap();
            assert!(lhs <= dual_rate_bound(m, d, lambda, i + 1, 8.0) + 1e-10);
        }
    }

    #[test]
    fn two_piece_multi_cut_support() {
        let f = MaxAffine::new(vec![(vec![2.0, 0.0], -1.0), (vec![-2.0, 0.0], 1.0)]);
        let h = SimplexIndicator { n: 2 };
        let recs = cg_variant_extract(Scheme::MultiCuts { max_cuts: 10 }, &f, &h, &[0.9, 0.1], 1.0, 30).unwrap();
        assert!(recs.iter().all(|r| r.support <= 2));
    }

    #[test]
    fn two_cut_extract_starts_at_first_subgradient() {
        let (f, h, _) = subproblem(5, 6);
        let x0 = uniform(5);
        let recs = cg_variant_extract(Scheme::TwoCuts, &f, &h, &x0, 0.3, 10).unwrap();
        assert_eq!(recs[0].z, f.subgradient(&x0));
    }
}
