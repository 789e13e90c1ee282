//! Cutting-plane models of `f` for one prox cycle and the exact solve of
//! `min_u Γ(u) + h(u) + |u - x0|^2 / (2λ)` for each model shape.
//!
//! Every model stores its pieces relative to the cycle's prox center `x0`.

use crate::error::{Error, Result};
use crate::game::project_simplex;
use crate::oracle::{regularized_value, AffinePiece, Composite, Cut, SubgradientOracle};
use crate::vecops::{dot, norm_sq};

pub const BISECTION_TOL: f64 = 1e-12;
pub const DUAL_PG_TOL: f64 = 1e-10;
/// Secondary stop for the multi-cut dual: the Frank-Wolfe gap of the
/// multiplier problem, which bounds `m - d(θ)` directly.
pub const DUAL_GAP_TOL: f64 = 1e-12;
pub const DUAL_MAX_ITERS: usize = 10_000;
pub const PRUNE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    OneCut,
    TwoCuts,
    MultiCuts { max_cuts: usize },
}

impl Scheme {
    pub fn validate(self) -> Result<()> {
        match self {
            Scheme::MultiCuts { max_cuts } if max_cuts < 2 => Err(Error::Usage(format!(
                "multi-cut bundles need max_cuts >= 2, got {max_cuts}"
            ))),
            _ => Ok(()),
        }
    }

    /// Whether updates keep `Γ_{j+1} >= max(Γ̄_j, new cut)`.
    pub fn keeps_max_structure(self) -> bool {
        !matches!(self, Scheme::OneCut)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    OneCut { aggregate: AffinePiece },
    TwoCuts { bar: AffinePiece, fresh: AffinePiece },
    MultiCuts { cuts: Vec<AffinePiece>, max_cuts: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleModel {
    center: Vec<f64>,
    kind: ModelKind,
    /// Multi-cut warm start for the next dual solve, aligned with `cuts`.
    warm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelProxSolution {
    pub x: Vec<f64>,
    /// Aggregate gradient: in the model subdifferential at `x` and in `-∂h^λ(x)`.
    pub s: Vec<f64>,
    /// Optimal value `Γ(x) + h(x) + |x - x0|^2 / (2λ)`.
    pub m: f64,
    /// Weights on the model pieces (`[1]` for one cut, `[θ, 1-θ]` for two).
    pub multipliers: Vec<f64>,
    /// Dual objective at `multipliers`; equals `m` up to solver tolerance.
    pub dual_value: f64,
    pub prox_calls: usize,
}

impl BundleModel {
    /// `Γ_1 = ℓ_f(·; x0)`; the first cut is normally anchored at the center.
    pub fn new(scheme: Scheme, center: Vec<f64>, first: &Cut) -> Result<Self> {
        scheme.validate()?;
        crate::error::check_dims("first cut", center.len(), first.grad.len())?;
        let piece = first.to_piece(&center);
        let kind = match scheme {
            Scheme::OneCut => ModelKind::OneCut { aggregate: piece },
            Scheme::TwoCuts => ModelKind::TwoCuts { bar: piece.clone(), fresh: piece },
            Scheme::MultiCuts { max_cuts } => ModelKind::MultiCuts { cuts: vec![piece], max_cuts },
        };
        Ok(BundleModel { center, kind, warm: vec![1.0] })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn pieces(&self) -> Vec<&AffinePiece> {
        match &self.kind {
            ModelKind::OneCut { aggregate } => vec![aggregate],
            ModelKind::TwoCuts { bar, fresh } => vec![bar, fresh],
            ModelKind::MultiCuts { cuts, .. } => cuts.iter().collect(),
        }
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        self.pieces()
            .into_iter()
            .map(|p| p.eval(&self.center, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The affine minorant `Γ̄ = Σ θ_i ℓ_i` selected by a solve's multipliers.
    pub fn aggregate(&self, multipliers: &[f64]) -> AffinePiece {
        let n = self.center.len();
        AffinePiece::mixture(multipliers, self.pieces(), n)
    }

    pub fn solve_prox(&self, h: &dyn Composite, lambda: f64) -> Result<ModelProxSolution> {
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::Usage(format!("stepsize must be positive, got {lambda}")));
        }
        match &self.kind {
            ModelKind::OneCut { .. } => Ok(self.finish(h, lambda, vec![1.0], 1)),
            ModelKind::TwoCuts { bar, fresh } => Ok(self.solve_two(h, lambda, bar, fresh)),
            ModelKind::MultiCuts { cuts, .. } => self.solve_multi(h, lambda, cuts),
        }
    }

    /// Builds the solution at `u = prox(x0 - λ Σ θ_i g_i)`.
    fn finish(
        &self,
        h: &dyn Composite,
        lambda: f64,
        multipliers: Vec<f64>,
        prox_calls: usize,
    ) -> ModelProxSolution {
        let agg = self.aggregate(&multipliers);
        let x = h.prox(&self.center, &agg.grad, lambda);
        let hl = regularized_value(h, &self.center, lambda, &x)
            .expect("prox output must lie in dom h");
        let m = self.value(&x) + hl;
        let dual_value = agg.eval(&self.center, &x) + hl;
        ModelProxSolution { x, s: agg.grad, m, multipliers, dual_value, prox_calls }
    }

    fn solve_two(
        &self,
        h: &dyn Composite,
        lambda: f64,
        bar: &AffinePiece,
        fresh: &AffinePiece,
    ) -> ModelProxSolution {
        let c = &self.center;
        // d'(θ) = bar(u(θ)) - fresh(u(θ)) is nonincreasing in θ.
        let slope = |theta: f64| {
            let tilt = crate::vecops::lerp(theta, &bar.grad, &fresh.grad);
            let u = h.prox(c, &tilt, lambda);
            bar.eval(c, &u) - fresh.eval(c, &u)
        };
        let mut calls = 1;
        let theta = if slope(1.0) >= 0.0 {
            1.0
        } else {
            calls += 1;
            if slope(0.0) <= 0.0 {
                0.0
            } else {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                while hi - lo > BISECTION_TOL {
                    let mid = 0.5 * (lo + hi);
                    calls += 1;
                    if slope(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        self.finish(h, lambda, vec![theta, 1.0 - theta], calls + 1)
    }

    /// Accelerated projected gradient ascent on the multiplier simplex with
    /// gradient-based restarts.
    fn solve_multi(
        &self,
        h: &dyn Composite,
        lambda: f64,
        cuts: &[AffinePiece],
    ) -> Result<ModelProxSolution> {
        let k = cuts.len();
        let n = self.center.len();
        let c = &self.center;
        if k == 1 {
            return Ok(self.finish(h, lambda, vec![1.0], 1));
        }

        // The gradient of the dual is Lipschitz with constant λ|G P|^2, P the
        // projector onto sum-zero directions; centering the gradients
        // realizes P and the Frobenius norm bounds the operator norm.
        let mean = {
            let mut g = vec![0.0; n];
            for p in cuts {
                crate::vecops::axpy(&mut g, 1.0 / k as f64, &p.grad);
            }
            g
        };
        let spread: f64 = cuts.iter().map(|p| crate::vecops::dist_sq(&p.grad, &mean)).sum();
        let lip = lambda * spread;

        let mut calls = 0usize;
        let mut grad_at = |theta: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let agg = AffinePiece::mixture(theta, cuts.iter(), n);
            let u = h.prox(c, &agg.grad, lambda);
            calls += 1;
            let g = cuts.iter().map(|p| p.eval(c, &u)).collect();
            (g, u)
        };

        let mut theta = if self.warm.len() == k {
            self.warm.clone()
        } else {
            vec![1.0 / k as f64; k]
        };

        if lip <= f64::MIN_POSITIVE {
            // All gradients coincide: the dual is linear, put all mass on the highest piece.
            let (g, _) = grad_at(&theta);
            let best = (0..k).fold(0, |b, i| if g[i] > g[b] { i } else { b });
            theta = vec![0.0; k];
            theta[best] = 1.0;
            return Ok(self.finish(h, lambda, theta, calls + 1));
        }

        let mut y = theta.clone();
        let mut t = 1.0f64;
        let mut residual = f64::INFINITY;
        for it in 0..DUAL_MAX_ITERS {
            let (g, _) = grad_at(&y);
            let step: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi + gi / lip).collect();
            let next = project_simplex(&step);
            let pg = lip * crate::vecops::dist(&next, &y);
            residual = pg;

            let restart = dot(&crate::vecops::sub(&y, &next), &crate::vecops::sub(&next, &theta)) > 0.0;
            let prev = std::mem::replace(&mut theta, next);
            if pg <= DUAL_PG_TOL {
                break;
            }
            if it % 16 == 15 {
                let (gt, _) = grad_at(&theta);
                let top = gt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let fw = top - dot(&theta, &gt);
                if fw <= DUAL_GAP_TOL {
                    residual = 0.0;
                    break;
                }
            }
            if restart {
                t = 1.0;
                y = theta.clone();
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let beta = (t - 1.0) / t_next;
                y = theta.iter().zip(&prev).map(|(a, b)| a + beta * (a - b)).collect();
                t = t_next;
            }
        }
        if residual > DUAL_PG_TOL {
            return Err(Error::Tolerance { what: "multi-cut dual solve", residual });
        }
        Ok(self.finish(h, lambda, theta, calls + 1))
    }

    /// Folds the solve `sol` and a fresh cut at `sol.x` into `Γ_{j+1}`.
    pub fn update(&mut self, tau: f64, sol: &ModelProxSolution, new_cut: &Cut) -> Result<()> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Usage(format!("tau must lie in [0, 1], got {tau}")));
        }
        let fresh_piece = new_cut.to_piece(&self.center);
        match &mut self.kind {
            ModelKind::OneCut { aggregate } => {
                *aggregate = AffinePiece::combine(tau, aggregate, &fresh_piece);
            }
            ModelKind::TwoCuts { bar, fresh } => {
                let theta = sol.multipliers[0];
                *bar = AffinePiece::combine(theta, bar, fresh);
                *fresh = fresh_piece;
            }
            ModelKind::MultiCuts { cuts, max_cuts } => {
                let theta = &sol.multipliers;
                if theta.len() != cuts.len() {
                    return Err(Error::Usage("multipliers do not match the bundle".into()));
                }
                let mut kept: Vec<usize> = (0..cuts.len()).filter(|&i| theta[i] > PRUNE_TOL).collect();
                let mut next_cuts = Vec::with_capacity(*max_cuts);
                let mut next_warm = Vec::with_capacity(*max_cuts);
                if kept.len() + 1 > *max_cuts {
                    // Keep the heaviest pieces, merge the rest into their weighted average.
                    kept.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]).then(a.cmp(&b)));
                    let (top, rest) = kept.split_at(*max_cuts - 2);
                    let mut top = top.to_vec();
                    top.sort_unstable();
                    for &i in &top {
                        next_cuts.push(cuts[i].clone());
                        next_warm.push(theta[i]);
                    }
                    let mass: f64 = rest.iter().map(|&i| theta[i]).sum();
                    let weights: Vec<f64> = rest.iter().map(|&i| theta[i] / mass).collect();
                    let merged = AffinePiece::mixture(&weights, rest.iter().map(|&i| &cuts[i]), self.center.len());
                    next_cuts.push(merged);
                    next_warm.push(mass);
                } else {
                    for &i in &kept {
                        next_cuts.push(cuts[i].clone());
                        next_warm.push(theta[i]);
                    }
                }
                // An exact repeat of a kept piece adds nothing to the max.
                if !next_cuts.iter().any(|c| same_piece(c, &fresh_piece)) {
                    next_cuts.push(fresh_piece);
                    next_warm.push(0.0);
                }
                let total: f64 = next_warm.iter().sum();
                for w in &mut next_warm {
                    *w /= total;
                }
                *cuts = next_cuts;
                self.warm = next_warm;
            }
        }
        Ok(())
    }
}

fn same_piece(a: &AffinePiece, b: &AffinePiece) -> bool {
    let tol = 1e-14 * (1.0 + a.at_center.abs().max(b.at_center.abs()));
    (a.at_center - b.at_center).abs() <= tol
        && a.grad.iter().zip(&b.grad).all(|(x, y)| (x - y).abs() <= 1e-14 * (1.0 + x.abs()))
}

/// Largest violations of the bundle-management conditions over `samples`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GbmReport {
    /// `Γ_after(u) - f(u)`, positive part.
    pub minorant: f64,
    /// `τ Γ̄(u) + (1-τ) ℓ(u) - Γ_after(u)`, positive part.
    pub aggregation: f64,
    /// `|Γ̄(x_j) - Γ_before(x_j)|`.
    pub tightness: f64,
    /// `max(Γ̄(u), ℓ(u)) - Γ_after(u)`, positive part.
    pub max_structure: f64,
}

pub fn gbm_contract_check(
    before: &BundleModel,
    after: &BundleModel,
    tau: f64,
    sol: &ModelProxSolution,
    new_cut: &Cut,
    f: &dyn SubgradientOracle,
    samples: &[Vec<f64>],
) -> GbmReport {
    let c = before.center();
    let bar = before.aggregate(&sol.multipliers);
    let mut r = GbmReport {
        tightness: (bar.eval(c, &sol.x) - before.value(&sol.x)).abs(),
        ..GbmReport::default()
    };
    for u in samples {
        let ga = after.value(u);
        let b = bar.eval(c, u);
        let l = new_cut.eval_unchecked(u);
        r.minorant = r.minorant.max(ga - f.value(u));
        r.aggregation = r.aggregation.max(tau * b + (1.0 - tau) * l - ga);
        r.max_structure = r.max_structure.max(b.max(l) - ga);
    }
    r
}

/// Largest gradient norm among the model pieces.
pub fn max_piece_grad_norm(model: &BundleModel) -> f64 {
    model
        .pieces()
        .into_iter()
        .map(|p| norm_sq(&p.grad).sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{SimplexIndicator, LinearPlusLinf};
    use crate::oracle::linearize;

    fn cut(anchor: &[f64], value: f64, grad: &[f64]) -> Cut {
        Cut::new(anchor.to_vec(), value, grad.to_vec()).unwrap()
    }

    #[test]
    fn one_cut_closed_form() {
        let h = SimplexIndicator { n: 2 };
        let x0 = vec![0.5, 0.5];
        // <c, .> with c = (1, 0), expressed as a cut anchored at x0
        let model = BundleModel::new(Scheme::OneCut, x0.clone(), &cut(&x0, 0.5, &[1.0, 0.0])).unwrap();
        let sol = model.solve_prox(&h, 1.0).unwrap();
        assert_eq!(sol.x, vec![0.0, 1.0]);
        assert_eq!(sol.s, vec![1.0, 0.0]);
        assert!((sol.m - 0.25).abs() < 1e-15);
    }

    #[test]
    fn duplicate_two_cuts_match_one_cut() {
        let h = SimplexIndicator { n: 3 };
        let x0 = vec![0.2, 0.3, 0.5];
        let c = cut(&x0, 1.0, &[0.4, -0.2, 0.9]);
        let one = BundleModel::new(Scheme::OneCut, x0.clone(), &c).unwrap().solve_prox(&h, 0.7).unwrap();
        let two = BundleModel::new(Scheme::TwoCuts, x0.clone(), &c).unwrap().solve_prox(&h, 0.7).unwrap();
        assert_eq!(one.x, two.x);
        assert!((one.m - two.m).abs() < 1e-15);
    }

    #[test]
    fn tau_endpoints() {
        let x0 = vec![0.5, 0.5];
        let h = SimplexIndicator { n: 2 };
        let first = cut(&x0, 1.0, &[1.0, 2.0]);
        let mut m = BundleModel::new(Scheme::OneCut, x0.clone(), &first).unwrap();
        let sol = m.solve_prox(&h, 1.0).unwrap();
        let fresh = cut(&sol.x, 3.0, &[-1.0, 0.5]);
        let before = m.clone();
        m.update(1.0, &sol, &fresh).unwrap();
        assert_eq!(m, before);
        m.update(0.0, &sol, &fresh).unwrap();
        for u in [[0.0, 1.0], [1.0, 0.0], [0.3, 0.7]] {
            assert!((m.value(&u) - fresh.eval(&u).unwrap()).abs() < 1e-14);
        }
        assert!(matches!(m.update(1.5, &sol, &fresh), Err(Error::Usage(_))));
    }

    /// Two pieces on the 2-simplex: f(x) = |2 x1 - 1|.
    struct Kink;
    impl SubgradientOracle for Kink {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            (2.0 * x[0] - 1.0).abs()
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            if 2.0 * x[0] - 1.0 >= 0.0 { vec![2.0, 0.0] } else { vec![-2.0, 0.0] }
        }
        fn lipschitz_bound(&self) -> f64 {
            2.0
        }
    }

    #[test]
    fn two_cuts_become_exact_after_second_piece() {
        let h = SimplexIndicator { n: 2 };
        let x0 = vec![0.9, 0.1];
        let lambda = 1.0;
        let mut m = BundleModel::new(Scheme::TwoCuts, x0.clone(), &linearize(&Kink, &x0).unwrap()).unwrap();
        let mut tight = false;
        for _ in 0..4 {
            let sol = m.solve_prox(&h, lambda).unwrap();
            if (m.value(&sol.x) - Kink.value(&sol.x)).abs() < 1e-9 {
                tight = true;
                break;
            }
            let c = linearize(&Kink, &sol.x).unwrap();
            m.update(0.5, &sol, &c).unwrap();
        }
        assert!(tight);
    }

    fn samples(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|v| v / s).collect()
            })
            .collect()
    }

    fn contract_run(scheme: Scheme) -> Vec<GbmReport> {
        let f = LinearPlusLinf::new(vec![0.3, -0.1, 0.2, 0.05], 0.8, 0.0);
        let h = SimplexIndicator { n: 4 };
        let x0 = vec![0.25; 4];
        let pts = samples(4, 100, 11);
        let mut model = BundleModel::new(scheme, x0.clone(), &linearize(&f, &x0).unwrap()).unwrap();
        let mut out = Vec::new();
        for j in 1..12 {
            let sol = model.solve_prox(&h, 0.5).unwrap();
            let c = linearize(&f, &sol.x).unwrap();
            let tau = j as f64 / (j as f64 + 2.0);
            let before = model.clone();
            model.update(tau, &sol, &c).unwrap();
            out.push(gbm_contract_check(&before, &model, tau, &sol, &c, &f, &pts));
        }
        out
    }

    #[test]
    fn one_cut_meets_basic_contract_only() {
        let reports = contract_run(Scheme::OneCut);
        for r in &reports {
            assert!(r.minorant <= 1e-12 && r.aggregation <= 1e-12 && r.tightness <= 1e-12);
        }
        assert!(reports.iter().any(|r| r.max_structure > 1e-6));
    }

    #[test]
    fn max_schemes_meet_strong_contract() {
        for scheme in [Scheme::TwoCuts, Scheme::MultiCuts { max_cuts: 3 }, Scheme::MultiCuts { max_cuts: 10 }] {
            for r in contract_run(scheme) {
                assert!(r.minorant <= 1e-12, "{scheme:?} {r:?}");
                assert!(r.aggregation <= 1e-9, "{scheme:?} {r:?}");
                assert!(r.tightness <= 1e-9, "{scheme:?} {r:?}");
                assert!(r.max_structure <= 1e-9, "{scheme:?} {r:?}");
            }
        }
    }

    #[test]
    fn identical_models_report_no_violation() {
        let f = LinearPlusLinf::new(vec![0.3, -0.1], 0.2, 0.0);
        let h = SimplexIndicator { n: 2 };
        let x0 = vec![0.5, 0.5];
        let m = BundleModel::new(Scheme::OneCut, x0.clone(), &linearize(&f, &x0).unwrap()).unwrap();
        let sol = m.solve_prox(&h, 1.0).unwrap();
        let c = linearize(&f, &sol.x).unwrap();
        let r = gbm_contract_check(&m, &m, 1.0, &sol, &c, &f, &samples(2, 50, 1));
        assert_eq!(r.minorant, 0.0);
        assert_eq!(r.aggregation, 0.0);
        assert_eq!(r.tightness, 0.0);
    }

    #[test]
    fn bad_max_cuts_rejected() {
        let x0 = vec![1.0];
        let c = cut(&x0, 0.0, &[1.0]);
        assert!(BundleModel::new(Scheme::MultiCuts { max_cuts: 1 }, x0, &c).is_err());
    }
}
