use crate::oracle::{ConjugateOracle, ExtValue, SubgradientOracle};
use crate::vecops::{dot, norm};

/// Relative slack for deciding which coordinates attain the max norm.
pub const ACTIVE_TOL: f64 = 1e-12;
/// Absolute slack on the l1 residual in the conjugate membership test.
pub const CONJ_TOL: f64 = 1e-9;

pub fn linf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
}

/// Subgradient of the max norm with equal weight on every active coordinate.
pub fn linf_subgradient(x: &[f64]) -> Vec<f64> {
    let top = linf_norm(x);
    if top == 0.0 {
        return vec![0.0; x.len()];
    }
    let cutoff = top - ACTIVE_TOL * top;
    let active = x.iter().filter(|v| v.abs() >= cutoff).count();
    let w = 1.0 / active as f64;
    x.iter()
        .map(|&v| if v.abs() >= cutoff { w * v.signum() } else { 0.0 })
        .collect()
}

/// Minimizer and value of `<z,x> + gamma |x|_inf` over the unit simplex.
///
/// The minimizer spreads mass uniformly over the `j*` smallest entries of
/// `z`; `S_j = (gamma + sum of the j smallest) / j` and `j*` is the first
/// index with `S_j <= S_{j+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FzSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub support: usize,
}

pub fn exact_fz(z: &[f64], gamma: f64) -> FzSolution {
    let n = z.len();
    assert!(n > 0, "empty vector");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));

    let mut prefix = gamma + z[order[0]];
    let mut s_prev = prefix;
    let mut j_star = n;
    for j in 1..n {
        prefix += z[order[j]];
        let s_next = prefix / (j + 1) as f64;
        if s_prev <= s_next {
            j_star = j;
            break;
        }
        s_prev = s_next;
    }

    let mut x = vec![0.0; n];
    let w = 1.0 / j_star as f64;
    for &i in &order[..j_star] {
        x[i] = w;
    }
    FzSolution { x, value: s_prev, support: j_star }
}

/// `u -> <c,u> + gamma |u|_inf + constant`, one frozen slice of the game.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlusLinf {
    pub c: Vec<f64>,
    pub gamma: f64,
    pub constant: f64,
    lipschitz: f64,
}

impl LinearPlusLinf {
    /// Uses the tight bound `|c| + gamma` on subgradient norms.
    pub fn new(c: Vec<f64>, gamma: f64, constant: f64) -> Self {
        let lipschitz = norm(&c) + gamma;
        LinearPlusLinf { c, gamma, constant, lipschitz }
    }

    /// Overrides the Lipschitz constant with a (larger) instance-wide bound.
    pub fn with_lipschitz(mut self, bound: f64) -> Self {
        self.lipschitz = bound;
        self
    }

    /// 0 if `z` is in the l1 ball of radius gamma around `c`, else outside.
    pub fn conj_membership(&self, z: &[f64]) -> ExtValue {
        let r: f64 = z.iter().zip(&self.c).map(|(a, b)| (a - b).abs()).sum();
        if r <= self.gamma + CONJ_TOL {
            ExtValue::Finite(0.0)
        } else {
            ExtValue::OutsideDomain
        }
    }
}

impl SubgradientOracle for LinearPlusLinf {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.c, x) + self.gamma * linf_norm(x) + self.constant
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let g = linf_subgradient(x);
        self.c
            .iter()
            .zip(&g)
            .map(|(ci, gi)| ci + self.gamma * gi)
            .collect()
    }

    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }
}

impl ConjugateOracle for LinearPlusLinf {
    fn conjugate(&self, z: &[f64]) -> ExtValue {
        match self.conj_membership(z) {
            ExtValue::Finite(_) => ExtValue::Finite(-self.constant),
            outside => outside,
        }
    }
}
