//! l∞-regularized matrix games on simplices:
//!
//! `min_{x in Δn} max_{y in Δm}  y^T A x + γx |x|∞ − γy |y|∞`
//!
//! with sparse Gaussian payoffs, the exact primal/dual value functions, and
//! the slice oracles the saddle solvers consume.

mod linf;
mod simplex;
mod sparse;

pub use linf::{exact_fz, linf_norm, linf_subgradient, FzSolution, LinearPlusLinf, ACTIVE_TOL, CONJ_TOL};
pub use simplex::{on_simplex, project_simplex, simplex_prox, uniform, SimplexIndicator, SIMPLEX_TOL};
pub use sparse::CooMatrix;

use crate::error::{Error, Result};
use crate::oracle::{Composite, ExtValue};
use crate::saddle::SaddleProblem;
use crate::vecops::dot;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt::Write as _;

/// Points handed to the exact value functions may drift off the simplex by
/// this much before they are rejected.
pub const EVAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    a: CooMatrix,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub density: f64,
    pub seed: u64,
    /// Bound on the x-subgradients of f: max row norm of A plus γx.
    pub m_x: f64,
    /// Bound on the y-supergradients of f: max column norm of A plus γy.
    pub m_y: f64,
    hx: SimplexIndicator,
    hy: SimplexIndicator,
}

impl GameInstance {
    pub fn new(a: CooMatrix, gamma_x: f64, gamma_y: f64, density: f64, seed: u64) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::Usage("payoff matrix must be nonempty".into()));
        }
        if !(gamma_x >= 0.0 && gamma_y >= 0.0) {
            return Err(Error::Usage("regularization weights must be nonnegative".into()));
        }
        if a.entries().iter().any(|e| !e.2.is_finite()) {
            return Err(Error::Instance("non-finite payoff entry".into()));
        }
        let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
        let m_x = max(a.row_norms()) + gamma_x;
        let m_y = max(a.col_norms()) + gamma_y;
        let hx = SimplexIndicator { n: a.cols() };
        let hy = SimplexIndicator { n: a.rows() };
        Ok(GameInstance { a, gamma_x, gamma_y, density, seed, m_x, m_y, hx, hy })
    }

    /// Each entry is nonzero with probability `density`; nonzeros are N(0,1).
    pub fn generate(m: usize, n: usize, density: f64, gamma_x: f64, gamma_y: f64, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Usage("m and n must be at least 1".into()));
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::Usage(format!("density must lie in (0, 1], got {density}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for i in 0..m {
            for j in 0..n {
                if rng.random::<f64>() < density {
                    let v: f64 = rng.sample(StandardNormal);
                    entries.push((i, j, v));
                }
            }
        }
        GameInstance::new(CooMatrix::new(m, n, entries), gamma_x, gamma_y, density, seed)
    }

    pub fn from_dense(a: &[Vec<f64>], gamma_x: f64, gamma_y: f64) -> Result<Self> {
        GameInstance::new(CooMatrix::from_dense(a), gamma_x, gamma_y, 1.0, 0)
    }

    pub fn payoff(&self) -> &CooMatrix {
        &self.a
    }

    /// Dimension of the minimizing player (columns of A).
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Dimension of the maximizing player (rows of A).
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn lipschitz(&self) -> f64 {
        self.m_x.max(self.m_y)
    }

    pub fn phi(&self, x: &[f64]) -> Result<f64> {
        self.check_point(Side::X, x)?;
        let neg_ax: Vec<f64> = self.a.mul(x).into_iter().map(|v| -v).collect();
        Ok(self.gamma_x * linf_norm(x) - exact_fz(&neg_ax, self.gamma_y).value)
    }

    pub fn psi(&self, y: &[f64]) -> Result<f64> {
        self.check_point(Side::Y, y)?;
        let aty = self.a.mul_t(y);
        Ok(-self.gamma_y * linf_norm(y) + exact_fz(&aty, self.gamma_x).value)
    }

    pub fn phi_psi_eval(&self, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
        Ok((self.phi(x)?, self.psi(y)?))
    }

    /// Conjugate indicator of the slice on `side` with the other player frozen at `anchor`.
    pub fn conj_membership(&self, side: Side, anchor: &[f64], z: &[f64]) -> ExtValue {
        let slice = match side {
            Side::X => self.slice_x(anchor),
            Side::Y => self.slice_y_neg(anchor),
        };
        slice.conj_membership(z)
    }

    fn check_point(&self, side: Side, p: &[f64]) -> Result<()> {
        let (dim, name) = match side {
            Side::X => (self.n(), "x"),
            Side::Y => (self.m(), "y"),
        };
        if p.len() != dim {
            return Err(Error::Usage(format!("{name} has dimension {}, expected {dim}", p.len())));
        }
        if !on_simplex(p, EVAL_TOL) {
            return Err(Error::Usage(format!("{name} is off the simplex")));
        }
        Ok(())
    }

    /// Text form: a header `m n density gamma_x gamma_y seed`, then one
    /// zero-based `i j value` triplet per line, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{} {} {:.16e} {:.16e} {:.16e} {}",
            self.m(),
            self.n(),
            self.density,
            self.gamma_x,
            self.gamma_y,
            self.seed
        )
        .unwrap();
        for &(i, j, v) in self.a.entries() {
            writeln!(s, "{i} {j} {v:.16e}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header `m n density gamma_x gamma_y seed`".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: hline,
                msg: format!("header needs 6 fields, found {}", fields.len()),
            });
        }
        const NAMES: [&str; 6] = ["m", "n", "density", "gamma_x", "gamma_y", "seed"];
        let int = |k: usize| -> Result<u64> {
            fields[k].parse().map_err(|_| Error::Parse {
                line: hline,
                msg: format!("field `{}`: cannot parse `{}`", NAMES[k], fields[k]),
            })
        };
        let real = |k: usize| -> Result<f64> {
            fields[k].parse().map_err(|_| Error::Parse {
                line: hline,
                msg: format!("field `{}`: cannot parse `{}`", NAMES[k], fields[k]),
            })
        };
        let (m, n) = (int(0)? as usize, int(1)? as usize);
        let (density, gx, gy, seed) = (real(2)?, real(3)?, real(4)?, int(5)?);
        if m == 0 || n == 0 {
            return Err(Error::Parse { line: hline, msg: "m and n must be positive".into() });
        }

        let mut entries = Vec::new();
        for (line, body) in lines {
            let parts: Vec<&str> = body.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `i j value`, found {} fields", parts.len()),
                });
            }
            let bad = |what: &str| Error::Parse { line, msg: format!("cannot parse {what}") };
            let i: usize = parts[0].parse().map_err(|_| bad("row index"))?;
            let j: usize = parts[1].parse().map_err(|_| bad("column index"))?;
            let v: f64 = parts[2].parse().map_err(|_| bad("value"))?;
            if i >= m || j >= n {
                return Err(Error::Parse { line, msg: format!("index ({i}, {j}) outside {m}x{n}") });
            }
            entries.push((i, j, v));
        }
        GameInstance::new(CooMatrix::new(m, n, entries), gx, gy, density, seed)
    }
}

impl SaddleProblem for GameInstance {
    type Slice = LinearPlusLinf;

    fn dims(&self) -> (usize, usize) {
        (self.n(), self.m())
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(y, &self.a.mul(x)) + self.gamma_x * linf_norm(x) - self.gamma_y * linf_norm(y)
    }

    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let g = linf_subgradient(x);
        let mut out = self.a.mul_t(y);
        crate::vecops::axpy(&mut out, self.gamma_x, &g);
        out
    }

    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let g = linf_subgradient(y);
        let mut out = self.a.mul(x);
        crate::vecops::axpy(&mut out, -self.gamma_y, &g);
        out
    }

    fn lipschitz(&self) -> f64 {
        GameInstance::lipschitz(self)
    }

    fn diameter(&self) -> f64 {
        let dx = self.hx.diameter().unwrap_or(0.0);
        let dy = self.hy.diameter().unwrap_or(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    fn h_x(&self) -> &dyn Composite {
        &self.hx
    }

    fn h_y(&self) -> &dyn Composite {
        &self.hy
    }

    fn slice_x(&self, y: &[f64]) -> LinearPlusLinf {
        LinearPlusLinf::new(self.a.mul_t(y), self.gamma_x, -self.gamma_y * linf_norm(y))
            .with_lipschitz(self.lipschitz())
    }

    fn slice_y_neg(&self, x: &[f64]) -> LinearPlusLinf {
        let c: Vec<f64> = self.a.mul(x).into_iter().map(|v| -v).collect();
        LinearPlusLinf::new(c, self.gamma_y, -self.gamma_x * linf_norm(x))
            .with_lipschitz(self.lipschitz())
    }

    fn primal_value(&self, x: &[f64]) -> Option<f64> {
        self.phi(x).ok()
    }

    fn dual_value(&self, y: &[f64]) -> Option<f64> {
        self.psi(y).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::SubgradientOracle;

    #[test]
    fn identity_game_at_uniform() {
        let g = GameInstance::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]], 0.0, 0.0).unwrap();
        let (phi, psi) = g.phi_psi_eval(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!((phi, psi), (0.5, 0.5));
    }

    #[test]
    fn swap_game_at_pure_strategies() {
        let g = GameInstance::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]], 0.0, 0.0).unwrap();
        let (phi, psi) = g.phi_psi_eval(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!((phi, psi), (1.0, 0.0));
    }

    #[test]
    fn off_simplex_rejected() {
        let g = GameInstance::from_dense(&[vec![1.0]], 0.0, 0.0).unwrap();
        assert!(matches!(g.phi(&[0.9]), Err(Error::Usage(_))));
    }

    #[test]
    fn generation_is_reproducible() {
        let a = GameInstance::generate(30, 20, 0.1, 0.05, 0.05, 17).unwrap();
        let b = GameInstance::generate(30, 20, 0.1, 0.05, 0.05, 17).unwrap();
        assert_eq!(a, b);
        let c = GameInstance::generate(30, 20, 0.1, 0.05, 0.05, 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn full_density_single_entry() {
        let g = GameInstance::generate(1, 1, 1.0, 0.0, 0.0, 5).unwrap();
        assert_eq!(g.payoff().nnz(), 1);
    }

    #[test]
    fn bernoulli_density_is_plausible() {
        let g = GameInstance::generate(100, 100, 0.05, 0.05, 0.05, 1).unwrap();
        let nnz = g.payoff().nnz() as f64;
        // mean 500, sd about 22
        assert!((nnz - 500.0).abs() < 110.0, "nnz = {nnz}");
    }

    #[test]
    fn text_round_trip_is_exact() {
        let g = GameInstance::generate(7, 5, 0.4, 0.05, 0.1, 9).unwrap();
        let back = GameInstance::from_text(&g.to_text()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn malformed_text_reports_line() {
        let err = GameInstance::from_text("2 2 0.5 0 0 1\n0 0 1.0\n1 x 2.0\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, msg: "cannot parse column index".into() });
        let err = GameInstance::from_text("2 2 0.5 0 zero 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, ref msg } if msg.contains("gamma_y")));
    }

    #[test]
    fn slices_agree_with_joint_value() {
        let g = GameInstance::generate(6, 4, 0.5, 0.05, 0.07, 2).unwrap();
        let x = project_simplex(&[0.3, 0.1, 0.5, 0.2]);
        let y = project_simplex(&[0.1, 0.4, 0.0, 0.3, 0.2, 0.6]);
        let fx = g.slice_x(&y);
        let fy = g.slice_y_neg(&x);
        assert!((fx.value(&x) - g.value(&x, &y)).abs() < 1e-14);
        assert!((fy.value(&y) + g.value(&x, &y)).abs() < 1e-14);
        let gy: Vec<f64> = g.grad_y(&x, &y).into_iter().map(|v| -v).collect();
        assert_eq!(fy.subgradient(&y), gy);
        assert_eq!(fx.subgradient(&x), g.grad_x(&x, &y));
    }

    #[test]
    fn gradient_bounds_hold_at_samples() {
        let g = GameInstance::generate(20, 15, 0.2, 0.05, 0.05, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let x = project_simplex(&(0..15).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
            let y = project_simplex(&(0..20).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
            assert!(crate::vecops::norm(&g.grad_x(&x, &y)) <= g.m_x + 1e-12);
            assert!(crate::vecops::norm(&g.grad_y(&x, &y)) <= g.m_y + 1e-12);
            let (phi, psi) = g.phi_psi_eval(&x, &y).unwrap();
            let f = g.value(&x, &y);
            assert!(phi >= f - 1e-12 && f >= psi - 1e-12);
        }
    }
}
