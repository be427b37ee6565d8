use nalgebra::DVector;

use crate::error::{Error, Result};

/// Keeps the `s` largest-magnitude entries of `v` and zeroes the rest.
/// Magnitude ties break toward the smaller index, so the result is the
/// unique best s-term approximation with the lexicographically smallest
/// support among minimizers.
pub fn hard_threshold(v: &DVector<f64>, s: usize) -> Result<DVector<f64>> {
    let kept = top_magnitude_indices(v, s)?;
    let mut out = DVector::zeros(v.len());
    for j in kept {
        out[j] = v[j];
    }
    Ok(out)
}

/// Indices of the `s` largest-magnitude entries (ties toward smaller index),
/// in increasing index order. Entries that are exactly zero are still
/// eligible for selection; callers wanting a support should drop them.
pub(crate) fn top_magnitude_indices(v: &DVector<f64>, s: usize) -> Result<Vec<usize>> {
    let p = v.len();
    if s > p {
        return Err(Error::invalid(format!("threshold size {s} exceeds length {p}")));
    }
    let mut order: Vec<usize> = (0..p).collect();
    // sort by (|v| descending, index ascending); |v| is never NaN here by
    // construction of the callers, but total_cmp keeps the sort lawful anyway
    order.sort_by(|&a, &b| {
        v[b].abs()
            .total_cmp(&v[a].abs())
            .then_with(|| a.cmp(&b))
    });
    order.truncate(s);
    order.sort_unstable();
    Ok(order)
}

/// Support of the thresholded vector: the kept indices whose value is
/// nonzero. At most `s` entries; fewer when `v` has fewer nonzeros.
pub fn threshold_support(v: &DVector<f64>, s: usize) -> Result<Vec<usize>> {
    let mut kept = top_magnitude_indices(v, s)?;
    kept.retain(|&j| v[j] != 0.0);
    Ok(kept)
}
