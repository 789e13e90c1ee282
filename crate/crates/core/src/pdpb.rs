//! Primal-dual proximal bundle outer loop and the prox-subgradient (PDS)
//! baseline. Both keep running averages of primal points and subgradients
//! whose combined conjugate gap certifies the original problem.

use crate::error::{Error, Result};
use crate::oracle::{Composite, ConjugateOracle, SubgradientOracle};
use crate::pdcp::{pdcp_run, CycleStatus, PdcpConfig};
use crate::vecops::running_mean_push;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdpbConfig {
    pub lambda: f64,
    pub eps_bar: f64,
    /// Cycle settings; the tolerance is overwritten with `eps_bar`.
    pub cycle: PdcpConfig,
    pub max_cycles: usize,
    /// Stop once the reported gap is at most this (needs a conjugate oracle).
    pub gap_target: Option<f64>,
    /// Stand-in radius for unbounded `dom h` when reporting gaps.
    pub radius: Option<f64>,
    pub abort_on_budget: bool,
}

impl PdpbConfig {
    pub fn new(lambda: f64, eps_bar: f64) -> Self {
        PdpbConfig {
            lambda,
            eps_bar,
            cycle: PdcpConfig::default(),
            max_cycles: 1000,
            gap_target: None,
            radius: None,
            abort_on_budget: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleSummary {
    pub center: Vec<f64>,
    pub x_last: Vec<f64>,
    pub tilde: Vec<f64>,
    pub s: Vec<f64>,
    pub m: f64,
    pub t: f64,
    pub first_t: f64,
    pub phi_tilde: f64,
    pub iters: usize,
    pub converged: bool,
    pub prox_calls: usize,
    pub oracle_calls: usize,
    /// Seconds since the run started, taken when the cycle ended.
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdpbState {
    pub k: usize,
    pub start: Vec<f64>,
    /// Current prox center `x̂_k`.
    pub center: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub s_bar: Vec<f64>,
    pub cycle_lengths: Vec<usize>,
    pub gap_history: Vec<(usize, f64)>,
    pub cycles: Vec<CycleSummary>,
    pub prox_calls: usize,
    pub oracle_calls: usize,
    pub exhausted_cycles: usize,
}

pub fn pdpb_run(
    f: &dyn SubgradientOracle,
    h: &dyn Composite,
    x_hat0: &[f64],
    cfg: &PdpbConfig,
    f_conj: Option<&dyn ConjugateOracle>,
) -> Result<PdpbState> {
    if !(cfg.lambda > 0.0 && cfg.eps_bar > 0.0) {
        return Err(Error::Usage("lambda and eps_bar must be positive".into()));
    }
    if cfg.gap_target.is_some() && f_conj.is_none() {
        return Err(Error::Capability("a gap target needs a conjugate oracle for f"));
    }
    let cycle_cfg = PdcpConfig { epsilon: cfg.eps_bar, ..cfg.cycle };
    let started = Instant::now();
    let n = x_hat0.len();
    let mut st = PdpbState {
        k: 0,
        start: x_hat0.to_vec(),
        center: x_hat0.to_vec(),
        x_bar: vec![0.0; n],
        s_bar: vec![0.0; n],
        cycle_lengths: Vec::new(),
        gap_history: Vec::new(),
        cycles: Vec::new(),
        prox_calls: 0,
        oracle_calls: 0,
        exhausted_cycles: 0,
    };

    while st.k < cfg.max_cycles {
        let r = pdcp_run(f, h, &st.center, cfg.lambda, &cycle_cfg)?;
        if let CycleStatus::BudgetExhausted { best_t } = r.status {
            st.exhausted_cycles += 1;
            if cfg.abort_on_budget {
                return Err(Error::Tolerance { what: "bundle cycle", residual: best_t });
            }
        }
        st.k += 1;
        running_mean_push(&mut st.x_bar, st.k, &r.tilde);
        running_mean_push(&mut st.s_bar, st.k, &r.s);
        st.cycle_lengths.push(r.iters);
        st.prox_calls += r.prox_calls;
        st.oracle_calls += r.oracle_calls;
        st.cycles.push(CycleSummary {
            center: std::mem::replace(&mut st.center, r.x_last.clone()),
            x_last: r.x_last.clone(),
            tilde: r.tilde.clone(),
            s: r.s.clone(),
            m: r.m,
            t: r.t,
            first_t: r.first_t(),
            phi_tilde: r.phi_tilde,
            iters: r.iters,
            converged: r.converged(),
            prox_calls: r.prox_calls,
            oracle_calls: r.oracle_calls,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        });

        if let Some(conj) = f_conj {
            let gap = pdpb_gap_report(&st, f, conj, h, cfg.radius)?;
            st.gap_history.push((st.k, gap));
            if cfg.gap_target.is_some_and(|target| gap <= target) {
                break;
            }
        }
    }
    Ok(st)
}

/// `φ(x̄) + f*(s̄) + ĥ*(-s̄)` where `ĥ` is `h` itself on a bounded domain or
/// `h` restricted to the ball of the given radius around the start point.
pub fn pdpb_gap_report(
    state: &PdpbState,
    f: &dyn SubgradientOracle,
    f_conj: &dyn ConjugateOracle,
    h: &dyn Composite,
    radius: Option<f64>,
) -> Result<f64> {
    averaged_gap(&state.x_bar, &state.s_bar, &state.start, f, f_conj, h, radius)
}

fn averaged_gap(
    x_bar: &[f64],
    s_bar: &[f64],
    start: &[f64],
    f: &dyn SubgradientOracle,
    f_conj: &dyn ConjugateOracle,
    h: &dyn Composite,
    radius: Option<f64>,
) -> Result<f64> {
    let neg: Vec<f64> = s_bar.iter().map(|v| -v).collect();
    let support = match (h.domain_support(&neg), radius) {
        (Some(v), _) => v,
        (None, Some(r)) => h
            .support_within_ball(&neg, start, r)
            .ok_or(Error::Capability("support of h over a ball"))?,
        (None, None) => {
            return Err(Error::Capability(
                "gap report on an unbounded domain needs a radius",
            ))
        }
    };
    let hx = h
        .value(x_bar)
        .finite()
        .ok_or_else(|| Error::Instance("averaged point left dom h".into()))?;
    let fs = f_conj
        .conjugate(s_bar)
        .finite()
        .ok_or_else(|| Error::InfeasibleDual("averaged subgradient is outside dom f*".into()))?;
    Ok(f.value(x_bar) + hx + fs + support)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdsResult {
    pub x_hat: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub s_bar: Vec<f64>,
    pub gap_trace: Vec<(usize, f64)>,
    /// Seconds since the start at each gap evaluation.
    pub gap_seconds: Vec<f64>,
    /// Stopped early because a logged gap reached the target.
    pub reached_target: bool,
    pub prox_calls: usize,
    pub oracle_calls: usize,
}

/// `x̂_k = prox(x̂_{k-1} - λ f'(x̂_{k-1}))` with averages of `x̂_i` and the
/// subgradients used. Gaps are logged every `gap_every` steps when `f_conj`
/// is given.
#[allow(clippy::too_many_arguments)]
pub fn pds_run(
    f: &dyn SubgradientOracle,
    h: &dyn Composite,
    x_hat0: &[f64],
    lambda: f64,
    iters: usize,
    f_conj: Option<&dyn ConjugateOracle>,
    gap_every: usize,
    gap_target: Option<f64>,
) -> Result<PdsResult> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Usage(format!("stepsize must be positive, got {lambda}")));
    }
    if !h.contains(x_hat0) {
        return Err(Error::Usage("start point must lie in dom h".into()));
    }
    let n = x_hat0.len();
    let mut x = x_hat0.to_vec();
    let mut x_bar = vec![0.0; n];
    let mut s_bar = vec![0.0; n];
    if gap_target.is_some() && f_conj.is_none() {
        return Err(Error::Capability("a gap target needs a conjugate oracle for f"));
    }
    let started = Instant::now();
    let mut gap_trace = Vec::new();
    let mut gap_seconds = Vec::new();
    let mut reached_target = false;
    let cadence = gap_every.max(1);
    let mut k = 0;
    while k < iters {
        k += 1;
        let s = f.subgradient(&x);
        if !crate::vecops::all_finite(&s) {
            return Err(Error::Instance("oracle returned a non-finite subgradient".into()));
        }
        x = h.prox(&x, &s, lambda);
        running_mean_push(&mut x_bar, k, &x);
        running_mean_push(&mut s_bar, k, &s);
        if let Some(conj) = f_conj {
            if k % cadence == 0 || k == iters {
                let gap = averaged_gap(&x_bar, &s_bar, x_hat0, f, conj, h, None)?;
                gap_trace.push((k, gap));
                gap_seconds.push(started.elapsed().as_secs_f64());
                if gap_target.is_some_and(|t| gap <= t) {
                    reached_target = true;
                    break;
                }
            }
        }
    }
    Ok(PdsResult { x_hat: x, x_bar, s_bar, gap_trace, gap_seconds, reached_target, prox_calls: k, oracle_calls: k })
}
