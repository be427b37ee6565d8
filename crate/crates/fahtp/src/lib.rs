//! Sparse linear regression by hard thresholding pursuit, with a tuning-free
//! two-stage rule that picks the model size from the data.
//!
//! The pieces, bottom up:
//!
//! * [`types`]: datasets, sparse estimates, ground-truth models.
//! * [`threshold`] and [`lstsq`]: the two primitives every iteration uses,
//!   best s-term truncation and restricted OLS.
//! * [`htp`]: the iteration itself (gradient step, threshold, debias) with
//!   stopping, cycle handling and per-iteration traces.
//! * [`selection`]: solution paths over model sizes, the information
//!   criterion, and the two-stage adaptive size selection with its safeguard.
//! * [`rip`]: exhaustive restricted-isometry diagnostics for small designs.
//! * [`datagen`]: seeded synthetic scenarios (Gaussian and AR(1) designs,
//!   coefficient laws tied to the noise threshold, SNR-calibrated noise).
//! * [`metrics`]: estimation and support-recovery metrics plus replication
//!   summaries.

pub mod datagen;
pub mod error;
pub mod htp;
pub mod lstsq;
pub mod metrics;
pub mod rip;
pub mod selection;
pub mod threshold;
pub mod types;

pub use error::{Error, Result};
pub use htp::{htp_run, HtpConfig, HtpResult, HtpTrace, Init, StopReason, TraceStep};
pub use lstsq::ols_on_support;
pub use metrics::{aggregate, evaluate, stats, EvalReport, Stats, Summary};
pub use rip::{gamma_exhaustive, gamma_from_delta, rip_constant_exhaustive};
pub use selection::{
    build_path, build_path_with, default_s_max, fahtp, ic_value, oracle_estimator,
    select_on_path, sigma_plugin, FahtpSelection, PathEntry, PathOptions, SolutionPath,
    DEFAULT_KAPPA, DEFAULT_K_CONST, PROXIMITY_C,
};
pub use threshold::hard_threshold;
pub use types::{normalize_columns, Dataset, SparseEstimate, TrueModel};

pub use nalgebra;
