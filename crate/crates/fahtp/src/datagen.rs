use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::{normalize_columns, Dataset, TrueModel};

/// Per-purpose RNG streams under one scenario seed, so each piece of a draw
/// is reproducible on its own and replications stay uncorrelated.
pub const STREAM_DESIGN: u64 = 0;
pub const STREAM_COEFFICIENTS: u64 = 1;
pub const STREAM_NOISE: u64 = 2;
pub const STREAM_SPLIT: u64 = 3;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Design {
    IidGaussian,
    /// Rows i.i.d. N(0, S) with S_ij = rho^|i-j|.
    Ar1 { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefLaw {
    /// Magnitudes uniform on [lo, hi], optionally with independent random
    /// signs.
    TwoSidedUniform { lo: f64, hi: f64, random_sign: bool },
    /// Magnitudes uniform on [k_lo*u, k_hi*u] where u = sigma*sqrt(2 log p/n)
    /// is the noise-threshold unit; `two_point` draws the endpoints with
    /// equal probability instead of the interval.
    ThresholdUniform { k_lo: f64, k_hi: f64, two_point: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Gaussian { sigma: f64 },
    /// Noise scale solved from (beta*)' S beta* / sigma^2 = snr.
    SnrCalibrated { snr: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub p: usize,
    pub s_star: usize,
    pub design: Design,
    pub coef_law: CoefLaw,
    pub noise: Noise,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::invalid("n and p must be positive"));
        }
        if self.s_star == 0 || self.s_star > self.n.min(self.p) {
            return Err(Error::invalid(format!(
                "s_star {} outside 1..={}",
                self.s_star,
                self.n.min(self.p)
            )));
        }
        match self.design {
            Design::IidGaussian => {}
            Design::Ar1 { rho } => {
                if !(rho.is_finite() && rho.abs() < 1.0) {
                    return Err(Error::invalid(format!("ar1 rho {rho} outside (-1, 1)")));
                }
            }
        }
        match self.coef_law {
            CoefLaw::TwoSidedUniform { lo, hi, .. } => {
                if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                    return Err(Error::invalid(format!(
                        "two-sided uniform needs 0 < lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
            CoefLaw::ThresholdUniform { k_lo, k_hi, .. } => {
                if !(k_lo.is_finite() && k_hi.is_finite() && 0.0 < k_lo && k_lo <= k_hi) {
                    return Err(Error::invalid(format!(
                        "threshold uniform needs 0 < k_lo <= k_hi, got [{k_lo}, {k_hi}]"
                    )));
                }
                if let Noise::SnrCalibrated { .. } = self.noise {
                    // the law's unit needs sigma, which calibration only
                    // produces after the coefficients exist
                    return Err(Error::invalid(
                        "threshold-uniform coefficients cannot be combined with \
                         snr-calibrated noise",
                    ));
                }
            }
        }
        match self.noise {
            Noise::Gaussian { sigma } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::invalid(format!("sigma {sigma} must be nonnegative")));
                }
            }
            Noise::SnrCalibrated { snr } => {
                if !(snr.is_finite() && snr > 0.0) {
                    return Err(Error::invalid(format!("snr {snr} must be positive")));
                }
            }
        }
        Ok(())
    }
}

/// Design matrix only (response left at zero), columns normalized to
/// length sqrt(n). Draws fill row by row so the layout is reproducible.
pub fn gen_design(config: &ScenarioConfig) -> Result<Dataset> {
    config.validate()?;
    let (n, p) = (config.n, config.p);
    let mut rng = stream_rng(config.seed, STREAM_DESIGN);
    let mut x = DMatrix::zeros(n, p);
    match config.design {
        Design::IidGaussian => {
            for i in 0..n {
                for j in 0..p {
                    x[(i, j)] = rng.sample(StandardNormal);
                }
            }
        }
        Design::Ar1 { rho } => {
            let scale = (1.0 - rho * rho).sqrt();
            for i in 0..n {
                let mut prev: f64 = rng.sample(StandardNormal);
                x[(i, 0)] = prev;
                for j in 1..p {
                    let z: f64 = rng.sample(StandardNormal);
                    prev = rho * prev + scale * z;
                    x[(i, j)] = prev;
                }
            }
        }
    }
    let raw = Dataset { x, y: DVector::zeros(n), normalized: false };
    let (data, _) = normalize_columns(&raw)?;
    Ok(data)
}

/// Coefficient vector on a uniformly drawn size-s* support. For the
/// threshold law, `sigma_for_units` sets the unit u = sigma*sqrt(2 log p/n).
/// The returned model carries the noise scale implied by the config.
pub fn gen_coefficients(config: &ScenarioConfig, sigma_for_units: f64) -> Result<TrueModel> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, STREAM_COEFFICIENTS);
    let support = {
        let mut idx: Vec<usize> =
            rand::seq::index::sample(&mut rng, config.p, config.s_star).into_vec();
        idx.sort_unstable();
        idx
    };

    let mut beta = DVector::zeros(config.p);
    match config.coef_law {
        CoefLaw::TwoSidedUniform { lo, hi, random_sign } => {
            for &j in &support {
                let mag = rng.random_range(lo..=hi);
                let sign = if random_sign && rng.random::<bool>() { -1.0 } else { 1.0 };
                beta[j] = sign * mag;
            }
        }
        CoefLaw::ThresholdUniform { k_lo, k_hi, two_point } => {
            if !(sigma_for_units.is_finite() && sigma_for_units > 0.0) {
                return Err(Error::invalid(
                    "threshold-uniform coefficients need a positive sigma for the unit",
                ));
            }
            let unit =
                sigma_for_units * (2.0 * (config.p as f64).ln() / config.n as f64).sqrt();
            let (lo, hi) = (k_lo * unit, k_hi * unit);
            for &j in &support {
                beta[j] = if two_point {
                    if rng.random::<bool>() {
                        hi
                    } else {
                        lo
                    }
                } else if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..=hi)
                };
            }
        }
    }

    let sigma = match config.noise {
        Noise::Gaussian { sigma } => sigma,
        Noise::SnrCalibrated { snr } => snr_to_sigma(&beta, &config.design, snr)?,
    };
    TrueModel::new(beta, sigma)
}

/// sigma = sqrt((beta*)' S beta* / snr) with S the population covariance of
/// the design; only the support block of S enters.
pub fn snr_to_sigma(beta_star: &DVector<f64>, design: &Design, snr: f64) -> Result<f64> {
    if !(snr.is_finite() && snr > 0.0) {
        return Err(Error::invalid(format!("snr {snr} must be positive")));
    }
    let support: Vec<usize> = (0..beta_star.len()).filter(|&i| beta_star[i] != 0.0).collect();
    if support.is_empty() {
        return Err(Error::invalid("snr is undefined for an all-zero coefficient vector"));
    }
    let quad = match design {
        Design::IidGaussian => support.iter().map(|&i| beta_star[i] * beta_star[i]).sum(),
        Design::Ar1 { rho } => {
            if !(rho.is_finite() && rho.abs() < 1.0) {
                return Err(Error::invalid(format!("ar1 rho {rho} outside (-1, 1)")));
            }
            let mut q = 0.0;
            for &i in &support {
                for &j in &support {
                    q += beta_star[i] * beta_star[j] * rho.powi((i as i32 - j as i32).abs());
                }
            }
            q
        }
    };
    Ok((quad / snr).sqrt())
}

/// i.i.d. N(0, sigma^2) vector on the scenario's noise stream.
pub fn gen_noise(n: usize, sigma: f64, seed: u64) -> Result<DVector<f64>> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(format!("sigma {sigma} must be nonnegative")));
    }
    let mut rng = stream_rng(seed, STREAM_NOISE);
    Ok(DVector::from_fn(n, |_, _| sigma * rng.sample::<f64, _>(StandardNormal)))
}

/// Full instance: normalized design, coefficients, calibrated noise scale,
/// and the response y = X beta* + xi.
pub fn gen_scenario(config: &ScenarioConfig) -> Result<(Dataset, TrueModel)> {
    let design = gen_design(config)?;
    let sigma_units = match config.noise {
        Noise::Gaussian { sigma } => sigma,
        Noise::SnrCalibrated { .. } => 1.0, // unused: threshold law is rejected here
    };
    let truth = gen_coefficients(config, sigma_units)?;
    let xi = gen_noise(config.n, truth.sigma, config.seed)?;
    let y = &design.x * &truth.beta_star + xi;
    Ok((Dataset { x: design.x, y, normalized: true }, truth))
}
