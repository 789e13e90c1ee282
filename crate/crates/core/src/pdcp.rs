//! One primal-dual cutting-plane cycle: repeatedly minimize the bundle model
//! plus `h` plus the prox term around a fixed center, until the computable
//! gap `t_j = φ^λ(x̃_j) - m_j` drops below the tolerance.

use crate::bundle::{BundleModel, Scheme};
use crate::error::{Error, Result};
use crate::oracle::{
    linearize, regularized_conjugate_neg, regularized_value, Composite, ConjugateOracle, Cut,
    SubgradientOracle,
};
use crate::vecops::{dist, lerp_into, scale};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    /// `τ_j = j / (j + 2)`
    OpenLoop,
    Constant(f64),
}

impl TauRule {
    pub fn tau(self, j: usize) -> f64 {
        match self {
            TauRule::OpenLoop => j as f64 / (j as f64 + 2.0),
            TauRule::Constant(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TildeRule {
    ConvexCombination,
    BestIterate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    Tilde,
    Hat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdcpConfig {
    pub scheme: Scheme,
    pub tau_rule: TauRule,
    pub epsilon: f64,
    pub tilde_rule: TildeRule,
    pub max_iters: usize,
    /// Maintain the weighted average `x̂_j = (3 x_2 + Σ_{i>=3} i x_i) / A_j`.
    pub track_hat: bool,
    /// Also stop when the gap at `x̂_j` is below tolerance.
    pub stop_on_hat: bool,
    /// Keep every `x_j`, `s_j`, `f'(x_j)` and multiplier vector.
    pub record_iterates: bool,
}

impl Default for PdcpConfig {
    fn default() -> Self {
        PdcpConfig {
            scheme: Scheme::OneCut,
            tau_rule: TauRule::OpenLoop,
            epsilon: 1e-6,
            tilde_rule: TildeRule::ConvexCombination,
            max_iters: 100_000,
            track_hat: false,
            stop_on_hat: false,
            record_iterates: false,
        }
    }
}

impl PdcpConfig {
    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Usage(format!("tolerance must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::Usage("max_iters must be at least 1".into()));
        }
        if let TauRule::Constant(t) = self.tau_rule {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Usage(format!("tau must lie in [0, 1], got {t}")));
            }
        }
        if self.stop_on_hat && !self.track_hat {
            return Err(Error::Usage("stop_on_hat requires track_hat".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub t: f64,
    pub m: f64,
    /// `|x_j - x_{j-1}|`, absent at `j = 1`.
    pub step: Option<f64>,
    pub hat_t: Option<f64>,
    /// `φ^λ(x_j)`
    pub phi_x: f64,
    /// `φ^λ(x̃_j)`
    pub phi_tilde: f64,
    /// Model value `Γ_j(x_j)`.
    pub model_at_x: f64,
    pub prox_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub subgradient: Vec<f64>,
    pub tilde: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// `Σ θ_i ℓ_i(x_j)`, the aggregate minorant at the solution.
    pub aggregate_at_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CycleStatus {
    Converged(GapKind),
    BudgetExhausted { best_t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleResult {
    pub x_last: Vec<f64>,
    pub tilde: Vec<f64>,
    pub hat: Option<Vec<f64>>,
    pub s: Vec<f64>,
    pub t: f64,
    pub hat_t: Option<f64>,
    pub m: f64,
    pub phi_tilde: f64,
    pub iters: usize,
    pub status: CycleStatus,
    pub trace: Vec<IterRecord>,
    pub iterates: Vec<IterateRecord>,
    pub prox_calls: usize,
    pub oracle_calls: usize,
}

impl CycleResult {
    pub fn converged(&self) -> bool {
        matches!(self.status, CycleStatus::Converged(_))
    }

    /// The point whose gap met the tolerance and that gap.
    pub fn output(&self) -> (&[f64], f64) {
        match (&self.status, &self.hat, self.hat_t) {
            (CycleStatus::Converged(GapKind::Hat), Some(hat), Some(ht)) => (hat, ht),
            _ => (&self.tilde, self.t),
        }
    }

    pub fn first_t(&self) -> f64 {
        self.trace[0].t
    }
}

/// `f(u) + h(u) + |u - x0|^2 / (2λ)`.
pub fn prox_objective(
    f: &dyn SubgradientOracle,
    h: &dyn Composite,
    x0: &[f64],
    lambda: f64,
    u: &[f64],
) -> Result<f64> {
    let hl = regularized_value(h, x0, lambda, u)
        .ok_or_else(|| Error::Instance("iterate left the domain of h".into()))?;
    let fv = f.value(u);
    if !fv.is_finite() {
        return Err(Error::Instance("oracle returned a non-finite value".into()));
    }
    Ok(fv + hl)
}

pub fn pdcp_run(
    f: &dyn SubgradientOracle,
    h: &dyn Composite,
    x0: &[f64],
    lambda: f64,
    cfg: &PdcpConfig,
) -> Result<CycleResult> {
    cfg.validate()?;
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Usage(format!("stepsize must be positive, got {lambda}")));
    }
    crate::error::check_dims("prox center", f.dim(), x0.len())?;
    crate::error::check_dims("prox center", h.dim(), x0.len())?;
    if !h.contains(x0) {
        return Err(Error::Usage("prox center must lie in dom h".into()));
    }

    let mut model = BundleModel::new(cfg.scheme, x0.to_vec(), &linearize(f, x0)?)?;
    let mut oracle_calls = 1usize;
    let mut prox_calls = 0usize;
    let mut trace = Vec::new();
    let mut iterates = Vec::new();

    let mut tilde: Vec<f64> = Vec::new();
    let mut phi_tilde = f64::INFINITY;
    let mut hat_sum: Vec<f64> = Vec::new();
    let mut prev_x: Option<Vec<f64>> = None;
    let mut best_t = f64::INFINITY;

    for j in 1..=cfg.max_iters {
        let sol = model.solve_prox(h, lambda)?;
        prox_calls += sol.prox_calls;
        let (fx, gx) = f.value_and_subgradient(&sol.x);
        oracle_calls += 1;
        let cut = Cut::new(sol.x.clone(), fx, gx)?;
        let hl = regularized_value(h, x0, lambda, &sol.x)
            .ok_or_else(|| Error::Instance("prox output outside dom h".into()))?;
        let phi_x = fx + hl;

        if j == 1 {
            tilde = sol.x.clone();
            phi_tilde = phi_x;
        } else {
            match cfg.tilde_rule {
                TildeRule::ConvexCombination => {
                    lerp_into(&mut tilde, cfg.tau_rule.tau(j - 1), &sol.x);
                    phi_tilde = prox_objective(f, h, x0, lambda, &tilde)?;
                    oracle_calls += 1;
                }
                TildeRule::BestIterate => {
                    if phi_x < phi_tilde {
                        tilde = sol.x.clone();
                        phi_tilde = phi_x;
                    }
                }
            }
        }
        let t = phi_tilde - sol.m;

        let mut hat_t = None;
        if cfg.track_hat && j >= 2 {
            if j == 2 {
                hat_sum = scale(&sol.x, 3.0);
            } else {
                crate::vecops::axpy(&mut hat_sum, j as f64, &sol.x);
            }
            let a_j = (j * (j + 1)) as f64 / 2.0;
            let hat = scale(&hat_sum, 1.0 / a_j);
            hat_t = Some(prox_objective(f, h, x0, lambda, &hat)? - sol.m);
            oracle_calls += 1;
        }

        let model_at_x = model.value(&sol.x);
        trace.push(IterRecord {
            t,
            m: sol.m,
            step: prev_x.as_ref().map(|p| dist(p, &sol.x)),
            hat_t,
            phi_x,
            phi_tilde,
            model_at_x,
            prox_calls: sol.prox_calls,
        });
        if cfg.record_iterates {
            let agg = model.aggregate(&sol.multipliers);
            iterates.push(IterateRecord {
                x: sol.x.clone(),
                s: sol.s.clone(),
                subgradient: cut.grad.clone(),
                tilde: tilde.clone(),
                multipliers: sol.multipliers.clone(),
                aggregate_at_x: agg.eval(x0, &sol.x),
            });
        }
        best_t = best_t.min(t);

        let status = if t <= cfg.epsilon {
            Some(CycleStatus::Converged(GapKind::Tilde))
        } else if cfg.stop_on_hat && hat_t.is_some_and(|v| v <= cfg.epsilon) {
            Some(CycleStatus::Converged(GapKind::Hat))
        } else if j == cfg.max_iters {
            Some(CycleStatus::BudgetExhausted { best_t })
        } else {
            None
        };
        if let Some(status) = status {
            let a_j = (j * (j + 1)) as f64 / 2.0;
            let hat = (cfg.track_hat && j >= 2).then(|| scale(&hat_sum, 1.0 / a_j));
            return Ok(CycleResult {
                x_last: sol.x,
                tilde,
                hat,
                s: sol.s,
                t,
                hat_t,
                m: sol.m,
                phi_tilde,
                iters: j,
                status,
                trace,
                iterates,
                prox_calls,
                oracle_calls,
            });
        }

        model.update(cfg.tau_rule.tau(j), &sol, &cut)?;
        prev_x = Some(sol.x);
    }
    unreachable!("the loop returns at j = max_iters")
}

/// `φ^λ(x̃) + f*(s) + (h^λ)*(-s)`: the primal-dual gap of the prox
/// subproblem at the pair `(x̃, s)`, given `φ^λ(x̃)`.
pub fn certificate_value(
    phi_tilde: f64,
    s: &[f64],
    f_conj: &dyn ConjugateOracle,
    h: &dyn Composite,
    x0: &[f64],
    lambda: f64,
) -> Result<f64> {
    let fs = f_conj
        .conjugate(s)
        .finite()
        .ok_or_else(|| Error::InfeasibleDual("s is outside dom f*".into()))?;
    let (hc, _) = regularized_conjugate_neg(h, x0, lambda, s);
    Ok(phi_tilde + fs + hc)
}

pub fn gap_certificate(
    result: &CycleResult,
    f_conj: &dyn ConjugateOracle,
    h: &dyn Composite,
    x0: &[f64],
    lambda: f64,
) -> Result<f64> {
    certificate_value(result.phi_tilde, &result.s, f_conj, h, x0, lambda)
}

/// Right-hand side of the cycle rate bound `2 t_1 / (j(j+1)) + 16 λ M^2 / (j+1)`.
pub fn rate_bound(t1: f64, lambda: f64, lipschitz: f64, j: usize) -> f64 {
    let j = j as f64;
    2.0 * t1 / (j * (j + 1.0)) + 16.0 * lambda * lipschitz * lipschitz / (j + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::AffineFunction;
    use crate::game::{GameInstance, LinearPlusLinf, SimplexIndicator};
    use crate::saddle::SaddleProblem;

    fn column_problem(n: usize, seed: u64) -> (LinearPlusLinf, SimplexIndicator) {
        let g = GameInstance::generate(n, n, 0.5, 0.05, 0.05, seed).unwrap();
        (g.slice_x(&crate::game::uniform(n)), SimplexIndicator { n })
    }

    #[test]
    fn affine_cycle_ends_immediately() {
        let f = AffineFunction::new(vec![0.3, -0.2, 0.5], 1.0);
        let h = SimplexIndicator { n: 3 };
        let r = pdcp_run(&f, &h, &[1.0 / 3.0; 3], 0.5, &PdcpConfig::default()).unwrap();
        assert_eq!(r.iters, 1);
        assert!(r.t.abs() < 1e-15);
        let cert = gap_certificate(&r, &f, &h, &[1.0 / 3.0; 3], 0.5).unwrap();
        assert!(cert.abs() < 1e-14);
    }

    #[test]
    fn one_cut_rate_on_column_problem() {
        let (f, h) = column_problem(5, 7);
        let lambda = 0.1;
        let cfg = PdcpConfig { epsilon: 1e-6, ..PdcpConfig::default() };
        let r = pdcp_run(&f, &h, &crate::game::uniform(5), lambda, &cfg).unwrap();
        assert!(r.converged());
        let t1 = r.first_t();
        for (i, rec) in r.trace.iter().enumerate() {
            assert!(rec.t >= -1e-10);
            assert!(rec.t <= rate_bound(t1, lambda, f.lipschitz_bound(), i + 1) + 1e-12);
        }
    }

    #[test]
    fn certificate_bounded_by_t() {
        let (f, h) = column_problem(6, 3);
        let x0 = crate::game::uniform(6);
        let cfg = PdcpConfig { epsilon: 1e-8, record_iterates: true, ..PdcpConfig::default() };
        let r = pdcp_run(&f, &h, &x0, 0.2, &cfg).unwrap();
        for (rec, it) in r.trace.iter().zip(&r.iterates) {
            let c = certificate_value(rec.phi_tilde, &it.s, &f, &h, &x0, 0.2).unwrap();
            assert!(c <= rec.t + 1e-8, "{c} > {}", rec.t);
        }
    }

    #[test]
    fn perturbed_dual_is_infeasible() {
        let (f, h) = column_problem(4, 1);
        let x0 = crate::game::uniform(4);
        let r = pdcp_run(&f, &h, &x0, 0.2, &PdcpConfig::default()).unwrap();
        let mut bad = r.s.clone();
        bad[0] += 1.0;
        let err = certificate_value(r.phi_tilde, &bad, &f, &h, &x0, 0.2).unwrap_err();
        assert!(matches!(err, Error::InfeasibleDual(_)));
    }

    #[test]
    fn best_iterate_satisfies_tilde_condition() {
        let (f, h) = column_problem(6, 12);
        let x0 = crate::game::uniform(6);
        for tau in [TauRule::OpenLoop, TauRule::Constant(0.3)] {
            let cfg = PdcpConfig {
                tilde_rule: TildeRule::BestIterate,
                tau_rule: tau,
                epsilon: 1e-9,
                max_iters: 300,
                ..PdcpConfig::default()
            };
            let r = pdcp_run(&f, &h, &x0, 0.3, &cfg).unwrap();
            for j in 1..r.trace.len() {
                let t = tau.tau(j);
                let lhs = r.trace[j].phi_tilde;
                let rhs = t * r.trace[j - 1].phi_tilde + (1.0 - t) * r.trace[j].phi_x;
                assert!(lhs <= rhs + 1e-10);
            }
        }
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let (f, h) = column_problem(8, 2);
        let cfg = PdcpConfig { epsilon: 1e-14, max_iters: 3, ..PdcpConfig::default() };
        let r = pdcp_run(&f, &h, &crate::game::uniform(8), 1.0, &cfg).unwrap();
        if r.iters == 3 {
            assert!(matches!(r.status, CycleStatus::BudgetExhausted { .. }));
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        let (f, h) = column_problem(3, 2);
        let x0 = crate::game::uniform(3);
        assert!(pdcp_run(&f, &h, &x0, 0.0, &PdcpConfig::default()).is_err());
        assert!(pdcp_run(&f, &h, &[1.0, 1.0, 1.0], 1.0, &PdcpConfig::default()).is_err());
        let bad = PdcpConfig { stop_on_hat: true, ..PdcpConfig::default() };
        assert!(pdcp_run(&f, &h, &x0, 1.0, &bad).is_err());
    }

    #[test]
    fn max_schemes_satisfy_weighted_average_bounds() {
        let (f, h) = column_problem(7, 5);
        let x0 = crate::game::uniform(7);
        let lambda = 0.2;
        let m = f.lipschitz_bound();
        for scheme in [Scheme::TwoCuts, Scheme::MultiCuts { max_cuts: 10 }] {
            let cfg = PdcpConfig { scheme, epsilon: 1e-9, track_hat: true, max_iters: 400, ..PdcpConfig::default() };
            let r = pdcp_run(&f, &h, &x0, lambda, &cfg).unwrap();
            for (i, rec) in r.trace.iter().enumerate() {
                let j = (i + 1) as f64;
                if let Some(ht) = rec.hat_t {
                    assert!(ht <= 16.0 * lambda * m * m / (j + 1.0) + 1e-8);
                }
                if let Some(step) = rec.step {
                    assert!(step <= 2.0 * lambda * m + 1e-8);
                }
            }
        }
    }
}
