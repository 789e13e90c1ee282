//! Convex-concave saddle problems `min_x max_y f(x,y) + h1(x) - h2(y)`.
//!
//! Two solvers: the simultaneous prox-subgradient method (CS-SPP) and the
//! bundle method that runs one cutting-plane cycle per player and outer
//! step (PB-SPP). Both can emit inexact-proximal-point certificates.

mod cs;
mod ippf;
mod pb;

pub use cs::{cs_spp_run, CsConfig, CsResult};
pub use ippf::{ippf_certificate, sample_domain, IppfCertificate, SppMethod, SppStep};
pub use pb::{cycle_length_bound, pb_spp_gap_bound, pb_spp_run, OuterRecord, PbConfig, PbResult};

use crate::error::{Error, Result};
use crate::oracle::{Composite, SubgradientOracle};

/// A saddle function with first-order oracles in each argument.
///
/// `x` has dimension `dims().0`, `y` has dimension `dims().1`.
pub trait SaddleProblem: Sync {
    /// Oracle type for one frozen slice.
    type Slice: SubgradientOracle + Send;

    fn dims(&self) -> (usize, usize);
    fn value(&self, x: &[f64], y: &[f64]) -> f64;
    /// A subgradient of `f(·, y)` at `x`.
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    /// A supergradient of `f(x, ·)` at `y`.
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    /// Bound on both gradient norms.
    fn lipschitz(&self) -> f64;
    /// Diameter of `dom h1 × dom h2`.
    fn diameter(&self) -> f64;
    fn h_x(&self) -> &dyn Composite;
    fn h_y(&self) -> &dyn Composite;
    /// `f(·, y)`
    fn slice_x(&self, y: &[f64]) -> Self::Slice;
    /// `-f(x, ·)`
    fn slice_y_neg(&self, x: &[f64]) -> Self::Slice;

    /// `φ(x) = max_y f(x,y) + h1(x) - h2(y)` when computable.
    fn primal_value(&self, _x: &[f64]) -> Option<f64> {
        None
    }
    /// `ψ(y) = min_x f(x,y) + h1(x) - h2(y)` when computable.
    fn dual_value(&self, _y: &[f64]) -> Option<f64> {
        None
    }
}

/// `φ(x) - ψ(y)`, nonnegative by weak duality.
pub fn saddle_gap<P: SaddleProblem + ?Sized>(p: &P, x: &[f64], y: &[f64]) -> Result<f64> {
    match (p.primal_value(x), p.dual_value(y)) {
        (Some(a), Some(b)) => Ok(a - b),
        _ => Err(Error::Capability("exact primal and dual value functions")),
    }
}

/// One logged row of a saddle run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SppLogEntry {
    pub outer_iter: usize,
    pub total_inner_iters: usize,
    pub prox_calls: usize,
    pub oracle_calls: usize,
    pub elapsed_seconds: f64,
    /// Exact gap when evaluators exist, otherwise the analytic bound.
    pub gap: f64,
    pub gap_is_exact: bool,
}
