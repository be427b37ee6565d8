use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::types::Dataset;

/// Subset budget for the exhaustive scan.
const MAX_SUBSETS: f64 = 1e6;

/// Exhaustive restricted-isometry constant: the largest deviation from 1 of
/// any eigenvalue of X_S' X_S / n over all column subsets S with |S| <= s.
/// Test and diagnostic use only; cost grows as C(p, s).
pub fn rip_constant_exhaustive(data: &Dataset, s: usize) -> Result<f64> {
    let (n, p) = (data.n() as f64, data.p());
    if s > p {
        return Err(Error::invalid(format!("subset size {s} exceeds p={p}")));
    }
    if binomial(p, s) > MAX_SUBSETS {
        return Err(Error::SubsetCountTooLarge { p, s });
    }
    let gram = data.x.tr_mul(&data.x) / n;
    let mut delta = 0.0f64;
    for k in 1..=s {
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            delta = delta.max(subset_deviation(&gram, &subset));
            if !next_combination(&mut subset, p) {
                break;
            }
        }
    }
    Ok(delta)
}

/// Largest |eigenvalue - 1| of the subset Gram block.
fn subset_deviation(gram: &DMatrix<f64>, subset: &[usize]) -> f64 {
    let k = subset.len();
    if k == 1 {
        return (gram[(subset[0], subset[0])] - 1.0).abs();
    }
    let mut block = DMatrix::zeros(k, k);
    for (a, &i) in subset.iter().enumerate() {
        for (b, &j) in subset.iter().enumerate() {
            block[(a, b)] = gram[(i, j)];
        }
    }
    SymmetricEigen::new(block)
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &ev| acc.max((ev - 1.0).abs()))
}

/// Advances `subset` to the next k-combination of 0..p in lexicographic
/// order; false when exhausted.
fn next_combination(subset: &mut [usize], p: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < p - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(p: usize, s: usize) -> f64 {
    let s = s.min(p - s); // callers guarantee s <= p
    let mut c = 1.0f64;
    for i in 0..s {
        c *= (p - i) as f64 / (i + 1) as f64;
        if c > MAX_SUBSETS * 10.0 {
            return c; // already past any budget, avoid needless growth
        }
    }
    c
}

/// Contraction factor 2 delta sqrt((1+delta)/(1-delta)) associated with a
/// restricted-isometry constant; below 1 the thresholding iteration is a
/// contraction, with boundary near delta = 0.3478.
pub fn gamma_from_delta(delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta {delta} outside [0, 1)")));
    }
    Ok(2.0 * delta * ((1.0 + delta) / (1.0 - delta)).sqrt())
}

/// Convenience: the contraction factor of the exhaustive constant.
pub fn gamma_exhaustive(data: &Dataset, s: usize) -> Result<f64> {
    let delta = rip_constant_exhaustive(data, s)?;
    if delta >= 1.0 {
        return Err(Error::invalid(format!(
            "rip constant {delta:.4} leaves the contraction regime"
        )));
    }
    gamma_from_delta(delta)
}
