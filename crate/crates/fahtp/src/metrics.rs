use crate::error::{Error, Result};
use crate::types::{SparseEstimate, TrueModel};

/// Support-recovery and estimation quality of one fit against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// ||b_hat - beta*||_2.
    pub ee: f64,
    /// Selected size minus true size.
    pub se: i64,
    pub tpr: f64,
    pub fpr: f64,
    pub mcc: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl EvalReport {
    /// Exact support recovery: every true coordinate found, none invented.
    pub fn exact_recovery(&self) -> bool {
        self.tpr == 1.0 && self.fpr == 0.0
    }
}

/// Confusion counts over the two supports, estimation error over the
/// coefficient vectors. Degenerate rates resolve vacuously (tpr = 1 with no
/// positives to find, fpr = 0 with no negatives); a zero factor in the MCC
/// denominator gives mcc = 0.
pub fn evaluate(estimate: &SparseEstimate, truth: &TrueModel) -> Result<EvalReport> {
    let p = truth.beta_star.len();
    if estimate.coefficients.len() != p {
        return Err(Error::invalid("estimate and truth dimensions differ"));
    }
    let mut in_truth = vec![false; p];
    for &j in &truth.support_star {
        in_truth[j] = true;
    }
    let mut in_estimate = vec![false; p];
    for &j in &estimate.support {
        in_estimate[j] = true;
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fneg = 0usize;
    for j in 0..p {
        match (in_estimate[j], in_truth[j]) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => tn += 1,
        }
    }

    let tpr = if tp + fneg == 0 { 1.0 } else { tp as f64 / (tp + fneg) as f64 };
    let fpr = if fp + tn == 0 { 0.0 } else { fp as f64 / (fp + tn) as f64 };
    let denom = ((tp + fp) * (tp + fneg)) as f64 * ((tn + fp) * (tn + fneg)) as f64;
    let mcc = if denom == 0.0 {
        0.0
    } else {
        (tp as f64 * tn as f64 - fp as f64 * fneg as f64) / denom.sqrt()
    };

    Ok(EvalReport {
        ee: (&estimate.coefficients - &truth.beta_star).norm(),
        se: estimate.support.len() as i64 - truth.support_star.len() as i64,
        tpr,
        fpr,
        mcc,
        true_pos: tp,
        false_pos: fp,
        true_neg: tn,
        false_neg: fneg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 denominator), 0 for a single value.
    pub sd: f64,
}

/// Mean, median and sample sd of a nonempty slice.
pub fn stats(values: &[f64]) -> Stats {
    debug_assert!(!values.is_empty());
    let k = values.len();
    let mean = values.iter().sum::<f64>() / k as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    };
    let sd = if k < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64).sqrt()
    };
    Stats { mean, median, sd }
}

/// Replication summary used by the experiment tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub ee: Stats,
    pub se: Stats,
    pub tpr: Stats,
    pub fpr: Stats,
    pub mcc: Stats,
    /// Fraction of replications with tpr = 1 and fpr = 0.
    pub success_exact: f64,
    /// Fraction of replications with se = 0.
    pub success_se_zero: f64,
}

pub fn aggregate(reports: &[EvalReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::invalid("cannot aggregate zero reports"));
    }
    let collect = |f: fn(&EvalReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    let k = reports.len() as f64;
    Ok(Summary {
        count: reports.len(),
        ee: stats(&collect(|r| r.ee)),
        se: stats(&collect(|r| r.se as f64)),
        tpr: stats(&collect(|r| r.tpr)),
        fpr: stats(&collect(|r| r.fpr)),
        mcc: stats(&collect(|r| r.mcc)),
        success_exact: reports.iter().filter(|r| r.exact_recovery()).count() as f64 / k,
        success_se_zero: reports.iter().filter(|r| r.se == 0).count() as f64 / k,
    })
}
