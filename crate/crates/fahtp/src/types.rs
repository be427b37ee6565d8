use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A regression instance: design matrix `x` (n rows, p columns) and
/// response `y` (length n). `normalized` records whether every column has
/// been rescaled to Euclidean norm sqrt(n).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub normalized: bool,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::invalid("design matrix must be nonempty"));
        }
        if y.len() != x.nrows() {
            return Err(Error::invalid(format!(
                "response length {} != row count {}",
                y.len(),
                x.nrows()
            )));
        }
        Ok(Dataset { x, y, normalized: false })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Rescales every column to norm sqrt(n) and returns the factors that map
/// coefficients fitted on the rescaled design back to the original column
/// scale (beta_original_j = factor_j * beta_rescaled_j).
pub fn normalize_columns(data: &Dataset) -> Result<(Dataset, Vec<f64>)> {
    let n = data.n();
    let target = (n as f64).sqrt();
    let mut x = data.x.clone();
    let mut factors = Vec::with_capacity(data.p());
    for j in 0..data.p() {
        let norm = x.column(j).norm();
        if norm == 0.0 {
            return Err(Error::DegenerateColumn { col: j });
        }
        let scale = target / norm;
        x.column_mut(j).scale_mut(scale);
        factors.push(scale);
    }
    Ok((
        Dataset { x, y: data.y.clone(), normalized: true },
        factors,
    ))
}

/// A sparse coefficient vector: zero exactly off `support`, plus the
/// residual sum of squares of the fit that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEstimate {
    pub coefficients: DVector<f64>,
    /// Strictly increasing column indices.
    pub support: Vec<usize>,
    pub rss: f64,
}

impl SparseEstimate {
    pub fn zero(p: usize, rss: f64) -> Self {
        SparseEstimate {
            coefficients: DVector::zeros(p),
            support: Vec::new(),
            rss,
        }
    }

    pub fn size(&self) -> usize {
        self.support.len()
    }

    /// Smallest absolute coefficient on the support; 0 for an empty model.
    pub fn min_signal(&self) -> f64 {
        if self.support.is_empty() {
            return 0.0;
        }
        self.support
            .iter()
            .map(|&j| self.coefficients[j].abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Ground truth for synthetic instances: the coefficient vector, its
/// support, and the noise scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    pub beta_star: DVector<f64>,
    /// Strictly increasing indices of the nonzero entries of beta_star.
    pub support_star: Vec<usize>,
    pub sigma: f64,
}

impl TrueModel {
    /// Derives the support from the nonzeros of `beta_star`.
    pub fn new(beta_star: DVector<f64>, sigma: f64) -> Result<Self> {
        if sigma < 0.0 {
            return Err(Error::invalid("sigma must be nonnegative"));
        }
        let support_star = (0..beta_star.len())
            .filter(|&i| beta_star[i] != 0.0)
            .collect();
        Ok(TrueModel { beta_star, support_star, sigma })
    }

    pub fn sparsity(&self) -> usize {
        self.support_star.len()
    }

    /// Smallest absolute nonzero entry; 0 for the all-zero model.
    pub fn beta_min(&self) -> f64 {
        if self.support_star.is_empty() {
            return 0.0;
        }
        self.support_star
            .iter()
            .map(|&i| self.beta_star[i].abs())
            .fold(f64::INFINITY, f64::min)
    }
}
