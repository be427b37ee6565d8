use crate::error::{Error, Result};
use crate::htp::{htp_run, HtpConfig};
use crate::lstsq::ols_on_support;
use crate::types::{Dataset, SparseEstimate, TrueModel};

pub const DEFAULT_K_CONST: f64 = 3.0;
pub const DEFAULT_KAPPA: f64 = 2.0;
/// Constant in the proximity bound ||b_hat - b_tilde||^2 <= C sigma^2 s log(p/s)/n.
pub const PROXIMITY_C: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PathEntry {
    pub s: usize,
    pub estimate: SparseEstimate,
    pub ic: f64,
    /// Smallest absolute nonzero coefficient, 0 for an all-zero estimate.
    pub lambda_min: f64,
    /// True when the restricted OLS at this size was rank deficient; such
    /// entries carry ic = +inf and a zero estimate.
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    /// One entry per model size, sorted and contiguous over s = 1..=s_max.
    pub entries: Vec<PathEntry>,
    pub s_max: usize,
    pub k_const: f64,
    pub n: usize,
    pub p: usize,
}

impl SolutionPath {
    pub fn entry(&self, s: usize) -> Option<&PathEntry> {
        if s == 0 || s > self.s_max {
            return None;
        }
        Some(&self.entries[s - 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FahtpSelection {
    /// Information-criterion minimizer over the path (ties go to smaller s).
    pub s_hat: usize,
    /// Plug-in noise level at s_hat.
    pub sigma_hat: f64,
    /// Winner of the descending ratio scan, if any.
    pub s_tilde: Option<usize>,
    pub final_s: usize,
    pub final_estimate: SparseEstimate,
    /// True when no scan candidate passed both tests and final_s fell back
    /// to s_hat.
    pub used_safeguard: bool,
    pub kappa: f64,
}

/// log(rss/(2n)) + k_const * (s/n) * log(p/s).
///
/// A perfect fit (rss = 0) returns -inf so that argmin selection prefers the
/// smallest perfectly fitting model.
pub fn ic_value(rss: f64, n: usize, p: usize, s: usize, k_const: f64) -> Result<f64> {
    if !rss.is_finite() || rss < 0.0 {
        return Err(Error::invalid(format!("rss must be finite and nonnegative, got {rss}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if s == 0 || s > p {
        return Err(Error::invalid(format!("model size {s} outside 1..={p}")));
    }
    if !k_const.is_finite() {
        return Err(Error::invalid("k_const must be finite"));
    }
    if rss == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let n = n as f64;
    let loss = rss / (2.0 * n);
    Ok(loss.ln() + k_const * (s as f64 / n) * (p as f64 / s as f64).ln())
}

/// Residual-based noise scale ||y - X b||_2 / sqrt(n), recomputed from the
/// data rather than read off the estimate.
pub fn sigma_plugin(data: &Dataset, estimate: &SparseEstimate) -> Result<f64> {
    if estimate.coefficients.len() != data.p() {
        return Err(Error::invalid("estimate dimension does not match data"));
    }
    let mut r = data.y.clone();
    for &j in &estimate.support {
        r.axpy(-estimate.coefficients[j], &data.x.column(j), 1.0);
    }
    Ok((r.norm_squared() / data.n() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    pub max_iter: usize,
    /// Run each size for exactly this many iterations instead of stopping on
    /// a stable support.
    pub fixed_iters: Option<usize>,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions { max_iter: 100, fixed_iters: None }
    }
}

pub fn build_path(data: &Dataset, s_max: usize, k_const: f64) -> Result<SolutionPath> {
    build_path_with(data, s_max, k_const, &PathOptions::default())
}

/// Zero-initialized HTP at every size s = 1..=s_max. Rank-deficient sizes
/// become failed entries (ic = +inf) instead of aborting the path.
pub fn build_path_with(
    data: &Dataset,
    s_max: usize,
    k_const: f64,
    options: &PathOptions,
) -> Result<SolutionPath> {
    let (n, p) = (data.n(), data.p());
    if s_max == 0 || s_max > n.min(p) {
        return Err(Error::invalid(format!("s_max {} outside 1..={}", s_max, n.min(p))));
    }
    let mut entries = Vec::with_capacity(s_max);
    for s in 1..=s_max {
        let config = HtpConfig {
            s,
            max_iter: options.max_iter,
            fixed_iters: options.fixed_iters,
            ..HtpConfig::new(s)
        };
        match htp_run(data, &config) {
            Ok(res) => {
                let ic = ic_value(res.estimate.rss, n, p, s, k_const)?;
                entries.push(PathEntry {
                    s,
                    lambda_min: res.estimate.min_signal(),
                    ic,
                    estimate: res.estimate,
                    failed: false,
                });
            }
            Err(Error::RankDeficient { .. }) => entries.push(PathEntry {
                s,
                estimate: SparseEstimate::zero(p, data.y.norm_squared()),
                ic: f64::INFINITY,
                lambda_min: 0.0,
                failed: true,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(SolutionPath { entries, s_max, k_const, n, p })
}

/// Two-stage selection over an already computed path.
///
/// Stage one picks s_hat by IC argmin. Stage two scans s_tilde downward from
/// min(2*s_hat, s_max - 1) to ceil(s_hat/2) for the first size where the
/// min-signal ratio lambda(s_tilde)/lambda(s_tilde + 1) reaches kappa (a zero
/// denominator counts as an infinite jump) while the estimate stays within
/// the proximity bound of the s_hat fit. Without such a size the selection
/// safeguards back to s_hat.
pub fn select_on_path(data: &Dataset, path: &SolutionPath, kappa: f64) -> Result<FahtpSelection> {
    if !(kappa > 1.0) {
        return Err(Error::invalid(format!("kappa must exceed 1, got {kappa}")));
    }
    let s_hat = path
        .entries
        .iter()
        .min_by(|a, b| a.ic.total_cmp(&b.ic))
        .map(|e| e.s)
        .ok_or_else(|| Error::invalid("empty path"))?;
    let hat_entry = path.entry(s_hat).unwrap();
    let sigma_hat = sigma_plugin(data, &hat_entry.estimate)?;

    let n = path.n as f64;
    let bound = PROXIMITY_C * sigma_hat * sigma_hat * s_hat as f64
        * (path.p as f64 / s_hat as f64).ln()
        / n;

    let hi = (2 * s_hat).min(path.s_max.saturating_sub(1));
    let lo = s_hat.div_ceil(2).max(1);
    let mut s_tilde = None;
    let mut s_candidate = hi;
    while s_candidate >= lo && s_candidate >= 1 {
        let cur = path.entry(s_candidate).unwrap();
        let next = path.entry(s_candidate + 1).unwrap();
        if !cur.failed && !next.failed {
            let ratio_ok = if next.lambda_min == 0.0 {
                true // no signal left one size up: an infinite jump
            } else {
                cur.lambda_min / next.lambda_min >= kappa
            };
            let diff = (&hat_entry.estimate.coefficients - &cur.estimate.coefficients)
                .norm_squared();
            if ratio_ok && diff <= bound {
                s_tilde = Some(s_candidate);
                break;
            }
        }
        s_candidate -= 1;
    }

    let final_s = s_tilde.unwrap_or(s_hat);
    Ok(FahtpSelection {
        s_hat,
        sigma_hat,
        s_tilde,
        final_s,
        final_estimate: path.entry(final_s).unwrap().estimate.clone(),
        used_safeguard: s_tilde.is_none(),
        kappa,
    })
}

/// Full pipeline: build the path, then select.
pub fn fahtp(data: &Dataset, s_max: usize, kappa: f64, k_const: f64) -> Result<FahtpSelection> {
    let path = build_path(data, s_max, k_const)?;
    select_on_path(data, &path, kappa)
}

/// OLS restricted to the true support; the benchmark an adaptive method is
/// judged against.
pub fn oracle_estimator(data: &Dataset, truth: &TrueModel) -> Result<SparseEstimate> {
    if truth.beta_star.len() != data.p() {
        return Err(Error::invalid("truth dimension does not match data"));
    }
    ols_on_support(data, &truth.support_star)
}

/// Largest path length the sample size supports:
/// floor(n / (2 log(max(p/n, 2)))), clamped into [1, min(n/2, p)].
pub fn default_s_max(n: usize, p: usize) -> usize {
    let ratio = (p as f64 / n as f64).max(2.0);
    let raw = (n as f64 / (2.0 * ratio.ln())).floor() as usize;
    raw.min(n / 2).min(p).max(1)
}
