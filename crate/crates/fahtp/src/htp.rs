use std::collections::HashSet;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lstsq::ols_on_support;
use crate::threshold::threshold_support;
use crate::types::{Dataset, SparseEstimate, TrueModel};

/// Initial iterate: zero, or a warm estimate (refitted on its support so the
/// trace starts from a restricted-OLS iterate).
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zero,
    Warm(SparseEstimate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HtpConfig {
    /// Model size: at every iteration the support has at most `s` entries.
    pub s: usize,
    pub max_iter: usize,
    pub init: Init,
    /// Record per-iteration supports, losses and min-signals.
    pub trace: bool,
    /// When set, run exactly this many iterations with stopping disabled and
    /// return the final iterate; used to expose convergence traces.
    pub fixed_iters: Option<usize>,
}

impl HtpConfig {
    pub fn new(s: usize) -> Self {
        HtpConfig {
            s,
            max_iter: 100,
            init: Init::Zero,
            trace: false,
            fixed_iters: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    SupportStable,
    MaxIter,
    CycleDetected,
}

/// One recorded iterate. `loss` is the scaled residual ||y - X b||^2 / (2n)
/// of the restricted-OLS fit on `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub support: Vec<usize>,
    pub loss: f64,
    pub min_signal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HtpTrace {
    /// Empty unless tracing was requested.
    pub iterations: Vec<TraceStep>,
    pub converged: bool,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HtpResult {
    pub estimate: SparseEstimate,
    pub trace: HtpTrace,
    /// X'(y - X b)/n at the returned estimate; at a stable support the s
    /// largest entries of |b + gradient_residual| are exactly the support.
    pub gradient_residual: DVector<f64>,
}

/// One HTP run: alternate a gradient step, hard thresholding to `s` entries,
/// and OLS debiasing on the selected support, until the support repeats.
///
/// An immediately repeated support stops the run as converged. A support
/// recurring from further back is a cycle; the best-loss iterate seen so far
/// is returned. Otherwise the run stops at `max_iter`, again returning the
/// best-loss iterate.
pub fn htp_run(data: &Dataset, config: &HtpConfig) -> Result<HtpResult> {
    let (n, p) = (data.n(), data.p());
    if config.s == 0 || config.s > n.min(p) {
        return Err(Error::invalid(format!(
            "model size {} outside 1..={}",
            config.s,
            n.min(p)
        )));
    }
    if config.max_iter == 0 || config.fixed_iters == Some(0) {
        return Err(Error::invalid("iteration budget must be at least 1"));
    }

    let mut current = match &config.init {
        Init::Zero => SparseEstimate::zero(p, data.y.norm_squared()),
        Init::Warm(est) => ols_on_support(data, &est.support)?,
    };

    let two_n = 2.0 * n as f64;
    let mut trace = Vec::new();
    let record = |t: usize, est: &SparseEstimate, out: &mut Vec<TraceStep>| {
        if config.trace {
            out.push(TraceStep {
                t,
                support: est.support.clone(),
                loss: est.rss / two_n,
                min_signal: est.min_signal(),
            });
        }
    };
    record(0, &current, &mut trace);

    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    visited.insert(current.support.clone());
    let mut best = current.clone();

    let limit = config.fixed_iters.unwrap_or(config.max_iter);
    let mut stop_reason = StopReason::MaxIter;
    let mut converged = false;

    for t in 1..=limit {
        let residual = residual_on_support(data, &current);
        let u = data.x.tr_mul(&residual) / n as f64 + &current.coefficients;
        let support = threshold_support(&u, config.s)?;

        if config.fixed_iters.is_none() && support == current.support {
            // stable support: the iterate is already the OLS fit there
            record(t, &current, &mut trace);
            stop_reason = StopReason::SupportStable;
            converged = true;
            best = current.clone();
            break;
        }

        let next = if support == current.support {
            current.clone()
        } else {
            ols_on_support(data, &support)?
        };
        record(t, &next, &mut trace);
        if next.rss < best.rss {
            best = next.clone();
        }

        if config.fixed_iters.is_none() && !visited.insert(support.clone()) {
            stop_reason = StopReason::CycleDetected;
            current = next;
            break;
        }
        let stable_now = support == current.support;
        current = next;
        if config.fixed_iters.is_some() && t == limit {
            converged = stable_now;
        }
    }

    let estimate = if config.fixed_iters.is_some() {
        current // fixed-iteration protocol reports the final iterate
    } else if converged {
        best
    } else {
        best // cycle or budget exhaustion: best loss seen, earliest on ties
    };

    let residual = residual_on_support(data, &estimate);
    let gradient_residual = data.x.tr_mul(&residual) / n as f64;
    Ok(HtpResult {
        estimate,
        trace: HtpTrace { iterations: trace, converged, stop_reason },
        gradient_residual,
    })
}

/// y - X b using only the support columns of b.
fn residual_on_support(data: &Dataset, est: &SparseEstimate) -> DVector<f64> {
    let mut r = data.y.clone();
    for &j in &est.support {
        r.axpy(-est.coefficients[j], &data.x.column(j), 1.0);
    }
    r
}

/// Per-iteration error split against a known truth: the first component is
/// ||(X'X/n - I)(beta_star - b_t)||_2 (how far the design is from acting as
/// an isometry on the current error), the second ||X'xi/n||_2 (the noise
/// correlation, constant over t). Requires a traced run; iterates are
/// reconstructed by refitting each recorded support.
pub fn diagnose(result: &HtpResult, truth: &TrueModel, data: &Dataset) -> Result<Vec<(f64, f64)>> {
    if result.trace.iterations.is_empty() {
        return Err(Error::NoTrace);
    }
    if truth.beta_star.len() != data.p() {
        return Err(Error::invalid("truth dimension does not match data"));
    }
    let n = data.n() as f64;
    let xi = &data.y - &data.x * &truth.beta_star;
    let stat_error = (data.x.tr_mul(&xi) / n).norm();

    let mut out = Vec::with_capacity(result.trace.iterations.len());
    for step in &result.trace.iterations {
        let est = ols_on_support(data, &step.support)?;
        let d = &truth.beta_star - &est.coefficients;
        let phi_d = data.x.tr_mul(&(&data.x * &d)) / n - &d;
        out.push((phi_d.norm(), stat_error));
    }
    Ok(out)
}
