//! Small closed-form functions: affine maps, maxima of affine maps, and the
//! zero composite. Handy as test problems and as building blocks.

use crate::game::CONJ_TOL;
use crate::oracle::{Composite, ConjugateOracle, ExtValue, SubgradientOracle};
use crate::vecops::{dot, norm};

/// `x -> <c,x> + b`
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFunction {
    pub c: Vec<f64>,
    pub b: f64,
}

impl AffineFunction {
    pub fn new(c: Vec<f64>, b: f64) -> Self {
        AffineFunction { c, b }
    }
}

impl SubgradientOracle for AffineFunction {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.c, x) + self.b
    }
    fn subgradient(&self, _x: &[f64]) -> Vec<f64> {
        self.c.clone()
    }
    fn lipschitz_bound(&self) -> f64 {
        norm(&self.c).max(f64::MIN_POSITIVE)
    }
}

impl ConjugateOracle for AffineFunction {
    fn conjugate(&self, z: &[f64]) -> ExtValue {
        let r: f64 = z.iter().zip(&self.c).map(|(a, b)| (a - b).abs()).sum();
        if r <= CONJ_TOL {
            ExtValue::Finite(-self.b)
        } else {
            ExtValue::OutsideDomain
        }
    }
}

/// `x -> max_i <a_i, x> + b_i`; the subgradient is the gradient of the first
/// maximizing piece.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxAffine {
    pub pieces: Vec<(Vec<f64>, f64)>,
}

impl MaxAffine {
    pub fn new(pieces: Vec<(Vec<f64>, f64)>) -> Self {
        assert!(!pieces.is_empty(), "need at least one piece");
        MaxAffine { pieces }
    }

    fn argmax(&self, x: &[f64]) -> (usize, f64) {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, (a, b))| (i, dot(a, x) + b))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    }
}

impl SubgradientOracle for MaxAffine {
    fn dim(&self) -> usize {
        self.pieces[0].0.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.argmax(x).1
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.pieces[self.argmax(x).0].0.clone()
    }
    fn lipschitz_bound(&self) -> f64 {
        self.pieces.iter().map(|(a, _)| norm(a)).fold(0.0, f64::max)
    }
}

/// `h = 0` on `R^n`; its prox is a plain gradient step.
#[derive(Debug, Clone, Copy)]
pub struct ZeroComposite {
    pub n: usize,
}

impl Composite for ZeroComposite {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, _x: &[f64]) -> ExtValue {
        ExtValue::Finite(0.0)
    }
    fn prox(&self, center: &[f64], tilt: &[f64], lambda: f64) -> Vec<f64> {
        center.iter().zip(tilt).map(|(c, t)| c - lambda * t).collect()
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n && x.iter().all(|v| v.is_finite())
    }
    fn support_within_ball(&self, c: &[f64], center: &[f64], radius: f64) -> Option<f64> {
        Some(dot(c, center) + radius * norm(c))
    }
}
