use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::types::{Dataset, SparseEstimate};

/// Relative tolerance on the QR diagonal below which the selected columns
/// are declared rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Least squares restricted to `support`: minimizes ||y - X_S u||_2 over
/// coefficients supported on S, via a thin Householder QR of X_S.
///
/// `support` must be strictly increasing with indices below p and at most n
/// entries. The empty support yields the zero estimate with rss = ||y||^2.
pub fn ols_on_support(data: &Dataset, support: &[usize]) -> Result<SparseEstimate> {
    let (n, p) = (data.n(), data.p());
    validate_support(support, p)?;
    if support.len() > n {
        return Err(Error::OverdeterminedSupport { support_len: support.len(), n });
    }
    if support.is_empty() {
        return Ok(SparseEstimate::zero(p, data.y.norm_squared()));
    }

    let xs = select_columns(&data.x, support);
    let qr = xs.clone().qr();
    let r = qr.r();
    let (mut min_diag, mut max_diag) = (f64::INFINITY, 0.0f64);
    for i in 0..support.len() {
        let d = r[(i, i)].abs();
        min_diag = min_diag.min(d);
        max_diag = max_diag.max(d);
    }
    if min_diag < RANK_TOL * max_diag || max_diag == 0.0 {
        return Err(Error::RankDeficient {
            support_len: support.len(),
            min_diag,
            max_diag,
        });
    }

    let qtb = qr.q().tr_mul(&data.y);
    let u = r
        .solve_upper_triangular(&qtb)
        .ok_or(Error::RankDeficient {
            support_len: support.len(),
            min_diag,
            max_diag,
        })?;

    let mut coefficients = DVector::zeros(p);
    for (k, &j) in support.iter().enumerate() {
        coefficients[j] = u[k];
    }
    let rss = (&data.y - xs * u).norm_squared();
    Ok(SparseEstimate {
        coefficients,
        support: support.to_vec(),
        rss,
    })
}

pub(crate) fn select_columns(x: &DMatrix<f64>, support: &[usize]) -> DMatrix<f64> {
    let mut xs = DMatrix::zeros(x.nrows(), support.len());
    for (k, &j) in support.iter().enumerate() {
        xs.set_column(k, &x.column(j));
    }
    xs
}

fn validate_support(support: &[usize], p: usize) -> Result<()> {
    for (k, &j) in support.iter().enumerate() {
        if j >= p {
            return Err(Error::invalid(format!("support index {j} out of range for p={p}")));
        }
        if k > 0 && support[k - 1] >= j {
            return Err(Error::invalid("support must be strictly increasing"));
        }
    }
    Ok(())
}
