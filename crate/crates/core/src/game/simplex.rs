use crate::oracle::{Composite, ExtValue};

/// Feasibility slack used when deciding membership of computed points.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Euclidean projection onto the unit simplex (sort and threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    assert!(n > 0, "cannot project onto an empty simplex");
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Prox of the simplex indicator: `Proj(center - lambda * tilt)`.
pub fn simplex_prox(center: &[f64], tilt: &[f64], lambda: f64) -> Vec<f64> {
    let v: Vec<f64> = center
        .iter()
        .zip(tilt)
        .map(|(c, t)| c - lambda * t)
        .collect();
    project_simplex(&v)
}

pub fn on_simplex(x: &[f64], tol: f64) -> bool {
    let sum: f64 = x.iter().sum();
    (sum - 1.0).abs() <= tol && x.iter().all(|&v| v >= -tol)
}

pub fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Indicator of the unit simplex in `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimplexIndicator {
    pub n: usize,
}

impl Composite for SimplexIndicator {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> ExtValue {
        if self.contains(x) {
            ExtValue::Finite(0.0)
        } else {
            ExtValue::OutsideDomain
        }
    }

    fn prox(&self, center: &[f64], tilt: &[f64], lambda: f64) -> Vec<f64> {
        simplex_prox(center, tilt, lambda)
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n && on_simplex(x, SIMPLEX_TOL)
    }

    fn domain_support(&self, c: &[f64]) -> Option<f64> {
        Some(c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    fn diameter(&self) -> Option<f64> {
        Some(if self.n > 1 { 2f64.sqrt() } else { 0.0 })
    }
}
