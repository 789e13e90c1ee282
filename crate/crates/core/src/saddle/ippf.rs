use crate::error::{Error, Result};
use crate::oracle::Composite;
use crate::saddle::SaddleProblem;
use crate::vecops::{dist_sq, dot, sub};
use rand::Rng;
use rand_distr::StandardNormal;

pub const CERT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SppMethod {
    CsSpp,
    PbSpp,
}

/// Everything needed to certify one outer step as an inexact proximal
/// point step.
#[derive(Debug, Clone, PartialEq)]
pub struct SppStep {
    pub k: usize,
    pub lambda: f64,
    pub x_prev: Vec<f64>,
    pub y_prev: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub y_tilde: Vec<f64>,
    pub eps_x: f64,
    pub eps_y: f64,
    /// Proximity slack `δ_k`.
    pub delta: f64,
    /// Proximity weight `σ`.
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IppfCertificate {
    pub k: usize,
    pub eps: f64,
    pub inclusion_residual: f64,
    pub proximity_lhs: f64,
    pub proximity_rhs: f64,
}

impl IppfCertificate {
    pub fn verify(&self) -> Result<()> {
        let fail = |check, residual| Err(Error::Certification { check, iteration: self.k, residual });
        if self.eps < -1e-10 {
            return fail("nonnegative eps", -self.eps);
        }
        if self.inclusion_residual > CERT_TOL {
            return fail("eps-subdifferential inclusion", self.inclusion_residual);
        }
        if self.proximity_lhs > self.proximity_rhs + CERT_TOL {
            return fail("proximity inequality", self.proximity_lhs - self.proximity_rhs);
        }
        Ok(())
    }
}

/// A random point of `dom h`: the prox (projection) of a Gaussian
/// perturbation of `near` with a random scale, so samples range from the
/// neighbourhood of `near` out to the boundary.
pub fn sample_domain<R: Rng + ?Sized>(h: &dyn Composite, near: &[f64], rng: &mut R) -> Vec<f64> {
    let scale = 2.0 * rng.random::<f64>();
    let v: Vec<f64> = near
        .iter()
        .map(|c| c + scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    h.prox(&v, &vec![0.0; v.len()], 1.0)
}

/// Computes `ε_k`, checks the proximity inequality, and probes the
/// ε-subdifferential inclusion at `samples` random pairs `(u, v)`.
pub fn ippf_certificate<P: SaddleProblem + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    step: &SppStep,
    samples: usize,
    rng: &mut R,
) -> IppfCertificate {
    let eps = step.eps_x + step.eps_y;
    let lam = step.lambda;
    let proximity_lhs = dist_sq(&step.x, &step.x_tilde) + dist_sq(&step.y, &step.y_tilde) + 2.0 * lam * eps;
    let proximity_rhs = step.delta
        + step.sigma * (dist_sq(&step.x_tilde, &step.x_prev) + dist_sq(&step.y_tilde, &step.y_prev));

    // p_k(u) = f(u, y_prev) + h1(u) and d_k(v) = -f(x_prev, v) + h2(v); the
    // indicator terms vanish on the sampled points.
    let p = |u: &[f64]| problem.value(u, &step.y_prev);
    let d = |v: &[f64]| -problem.value(&step.x_prev, v);
    let base = p(&step.x_tilde) + d(&step.y_tilde);
    let rx = sub(&step.x_prev, &step.x);
    let ry = sub(&step.y_prev, &step.y);

    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u = sample_domain(problem.h_x(), &step.x_tilde, rng);
        let v = sample_domain(problem.h_y(), &step.y_tilde, rng);
        let lhs = p(&u) + d(&v) - base;
        let rhs = (dot(&rx, &sub(&u, &step.x_tilde)) + dot(&ry, &sub(&v, &step.y_tilde))) / lam - eps;
        worst = worst.max(rhs - lhs);
    }
    IppfCertificate { k: step.k, eps, inclusion_residual: worst, proximity_lhs, proximity_rhs }
}
