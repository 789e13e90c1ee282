//! Oracle contracts shared by every solver: a subgradient oracle for the
//! nonsmooth part `f`, a prox-capable composite `h`, an optional conjugate
//! oracle for `f`, and the linearization (cut) primitive.

use crate::error::{check_dims, Error, Result};
use crate::vecops::{dist_sq, dot, all_finite};

/// A value in `R ∪ {+∞}`. Points outside a domain are marked explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtValue {
    Finite(f64),
    OutsideDomain,
}

impl ExtValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtValue::Finite(v) => Some(v),
            ExtValue::OutsideDomain => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtValue::Finite(_))
    }
}

/// First-order oracle for a convex, M-Lipschitz `f`.
///
/// Implementations must be deterministic: the same point always yields the
/// same subgradient.
pub trait SubgradientOracle: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
    /// Bound on the norm of every returned subgradient.
    fn lipschitz_bound(&self) -> f64;

    fn value_and_subgradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.subgradient(x))
    }
}

/// Fenchel conjugate `f*(z) = sup_x <z,x> - f(x)`.
pub trait ConjugateOracle: Sync {
    fn conjugate(&self, z: &[f64]) -> ExtValue;
}

/// A closed convex `h` with an exact prox.
pub trait Composite: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> ExtValue;
    /// `argmin_u <tilt,u> + h(u) + |u - center|^2 / (2 lambda)`
    fn prox(&self, center: &[f64], tilt: &[f64], lambda: f64) -> Vec<f64>;
    fn contains(&self, x: &[f64]) -> bool;

    /// `sup_{u in dom h} <c,u> - h(u)`; `None` when the domain is unbounded.
    fn domain_support(&self, _c: &[f64]) -> Option<f64> {
        None
    }

    fn diameter(&self) -> Option<f64> {
        None
    }

    /// `sup { <c,u> - h(u) : u in dom h, |u - center| <= radius }`, when cheap.
    fn support_within_ball(&self, _c: &[f64], _center: &[f64], _radius: f64) -> Option<f64> {
        None
    }
}

/// `h(u) + |u - x0|^2 / (2 lambda)`, or `None` outside `dom h`.
pub fn regularized_value(h: &dyn Composite, x0: &[f64], lambda: f64, u: &[f64]) -> Option<f64> {
    h.value(u)
        .finite()
        .map(|hv| hv + dist_sq(u, x0) / (2.0 * lambda))
}

/// Conjugate of the prox-regularized composite evaluated at `-s`, together
/// with the maximizer `u* = prox(x0 - lambda s)`. Costs one prox call.
pub fn regularized_conjugate_neg(
    h: &dyn Composite,
    x0: &[f64],
    lambda: f64,
    s: &[f64],
) -> (f64, Vec<f64>) {
    let u = h.prox(x0, s, lambda);
    let hl = regularized_value(h, x0, lambda, &u)
        .expect("prox output must lie in dom h");
    (-dot(s, &u) - hl, u)
}

/// Linearization of `f` at `anchor`: `u -> anchor_value + <grad, u - anchor>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub anchor: Vec<f64>,
    pub anchor_value: f64,
    pub grad: Vec<f64>,
}

impl Cut {
    pub fn new(anchor: Vec<f64>, anchor_value: f64, grad: Vec<f64>) -> Result<Self> {
        check_dims("cut gradient", anchor.len(), grad.len())?;
        if !anchor_value.is_finite() || !all_finite(&grad) {
            return Err(Error::Instance(
                "oracle returned a non-finite value or subgradient".into(),
            ));
        }
        Ok(Cut { anchor, anchor_value, grad })
    }

    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        check_dims("cut evaluation point", self.anchor.len(), u.len())?;
        Ok(self.eval_unchecked(u))
    }

    pub(crate) fn eval_unchecked(&self, u: &[f64]) -> f64 {
        let shift: f64 = self
            .grad
            .iter()
            .zip(u.iter().zip(&self.anchor))
            .map(|(g, (a, b))| g * (a - b))
            .sum();
        self.anchor_value + shift
    }

    /// Re-expresses the cut relative to a prox center.
    pub fn to_piece(&self, center: &[f64]) -> AffinePiece {
        AffinePiece {
            at_center: self.eval_unchecked(center),
            grad: self.grad.clone(),
        }
    }
}

pub fn linearize(f: &dyn SubgradientOracle, x: &[f64]) -> Result<Cut> {
    check_dims("linearization point", f.dim(), x.len())?;
    let (v, g) = f.value_and_subgradient(x);
    Cut::new(x.to_vec(), v, g)
}

/// Affine function stored as (value at a fixed center, gradient). Bundle
/// models keep every piece relative to the prox center of their cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    pub at_center: f64,
    pub grad: Vec<f64>,
}

impl AffinePiece {
    pub fn eval(&self, center: &[f64], u: &[f64]) -> f64 {
        let shift: f64 = self
            .grad
            .iter()
            .zip(u.iter().zip(center))
            .map(|(g, (a, b))| g * (a - b))
            .sum();
        self.at_center + shift
    }

    /// `t * a + (1 - t) * b`
    pub fn combine(t: f64, a: &AffinePiece, b: &AffinePiece) -> AffinePiece {
        AffinePiece {
            at_center: t * a.at_center + (1.0 - t) * b.at_center,
            grad: crate::vecops::lerp(t, &a.grad, &b.grad),
        }
    }

    /// Weighted sum with nonnegative weights that sum to one.
    pub fn mixture<'a>(
        weights: &[f64],
        pieces: impl IntoIterator<Item = &'a AffinePiece>,
        dim: usize,
    ) -> AffinePiece {
        let mut at_center = 0.0;
        let mut grad = vec![0.0; dim];
        for (w, p) in weights.iter().zip(pieces) {
            at_center += w * p.at_center;
            crate::vecops::axpy(&mut grad, *w, &p.grad);
        }
        AffinePiece { at_center, grad }
    }
}
