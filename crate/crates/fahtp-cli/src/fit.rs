//! `fahtp fit`: run the adaptive selector on one dataset from CSV files,
//! optionally holding out rows, and write summary plus coefficients.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use fahtp::datagen::{stream_rng, STREAM_SPLIT};
use fahtp::nalgebra::{DMatrix, DVector};
use fahtp::{
    build_path_with, default_s_max, normalize_columns, select_on_path, Dataset, FahtpSelection,
    PathOptions,
};

use crate::csvio::{fmt_f64, fmt_opt_f64, read_matrix, read_vector};
use crate::errors::{CliError, Result};

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub header: bool,
    pub no_normalize: bool,
    pub s_max: Option<usize>,
    pub kappa: f64,
    pub k_const: f64,
    pub max_iter: usize,
    /// Hold out this fraction of rows (drawn by seed) for a test error.
    pub split: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug)]
pub struct FitReport {
    pub n: usize,
    pub p: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub normalized: bool,
    pub s_max: usize,
    pub selection: FahtpSelection,
    /// Support indices (0-based) with coefficients mapped back to the
    /// original column scale.
    pub beta_original: Vec<(usize, f64)>,
    pub train_mse: f64,
    pub test_mse: Option<f64>,
}

/// Sorted disjoint (train, test) index sets; test gets floor(fraction * n).
fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CliError::usage(format!(
            "split fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let n_test = (fraction * n as f64).floor() as usize;
    if n_test == 0 || n_test >= n {
        return Err(CliError::usage(format!(
            "split {fraction} of {n} rows leaves an empty train or test set"
        )));
    }
    let mut rng = stream_rng(seed, STREAM_SPLIT);
    let mut test = rand::seq::index::sample(&mut rng, n, n_test).into_vec();
    test.sort_unstable();
    let test_set: HashSet<usize> = test.iter().copied().collect();
    let train = (0..n).filter(|i| !test_set.contains(i)).collect();
    Ok((train, test))
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

pub fn fit_from_matrices(x: DMatrix<f64>, y: DVector<f64>, opts: &FitOptions) -> Result<FitReport> {
    if y.len() != x.nrows() {
        return Err(CliError::Data(format!(
            "design has {} rows but response has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    let (n, p) = (x.nrows(), x.ncols());

    let (train_idx, test_idx) = match opts.split {
        Some(f) => split_indices(n, f, opts.seed)?,
        None => ((0..n).collect(), Vec::new()),
    };
    let (x_train, y_train) = (
        select_rows(&x, &train_idx),
        DVector::from_fn(train_idx.len(), |i, _| y[train_idx[i]]),
    );
    let raw = Dataset::new(x_train, y_train)?;
    let (data, factors) = if opts.no_normalize {
        let ones = vec![1.0; p];
        (raw, ones)
    } else {
        normalize_columns(&raw)?
    };
    let n_train = data.n();

    let s_max = match opts.s_max {
        Some(s) => s,
        None => default_s_max(n_train, p),
    };
    let path = build_path_with(
        &data,
        s_max,
        opts.k_const,
        &PathOptions { max_iter: opts.max_iter, fixed_iters: None },
    )?;
    if path.entries.iter().all(|e| e.failed) {
        return Err(CliError::Solver(fahtp::Error::Unfittable.to_string()));
    }
    let selection = select_on_path(&data, &path, opts.kappa)?;

    let est = &selection.final_estimate;
    let beta_original: Vec<(usize, f64)> = est
        .support
        .iter()
        .map(|&j| (j, factors[j] * est.coefficients[j]))
        .collect();
    let train_mse = est.rss / n_train as f64;

    let test_mse = if test_idx.is_empty() {
        None
    } else {
        // Predictions use original-scale coefficients on the raw held-out
        // rows; normalization factors came from the training rows only.
        let mut sq = 0.0;
        for &i in &test_idx {
            let mut pred = 0.0;
            for &(j, b) in &beta_original {
                pred += x[(i, j)] * b;
            }
            let r = y[i] - pred;
            sq += r * r;
        }
        Some(sq / test_idx.len() as f64)
    };

    Ok(FitReport {
        n,
        p,
        n_train,
        n_test: test_idx.len(),
        normalized: !opts.no_normalize,
        s_max,
        selection,
        beta_original,
        train_mse,
        test_mse,
    })
}

fn write_outputs(report: &FitReport, opts: &FitOptions) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", opts.out.display())))?;
    let summary_path = opts.out.join("fit_summary.csv");
    let coef_path = opts.out.join("fit_coefficients.csv");

    let sel = &report.selection;
    let mut w = csv::Writer::from_path(&summary_path)?;
    w.write_record([
        "n", "p", "n_train", "n_test", "normalized", "s_max", "kappa", "k_const", "max_iter",
        "s_hat", "s_tilde", "final_s", "used_safeguard", "sigma_hat", "rss", "train_mse",
        "test_mse",
    ])?;
    w.write_record([
        report.n.to_string(),
        report.p.to_string(),
        report.n_train.to_string(),
        report.n_test.to_string(),
        report.normalized.to_string(),
        report.s_max.to_string(),
        fmt_f64(opts.kappa),
        fmt_f64(opts.k_const),
        opts.max_iter.to_string(),
        sel.s_hat.to_string(),
        sel.s_tilde.map(|s| s.to_string()).unwrap_or_default(),
        sel.final_s.to_string(),
        sel.used_safeguard.to_string(),
        fmt_f64(sel.sigma_hat),
        fmt_f64(sel.final_estimate.rss),
        fmt_f64(report.train_mse),
        fmt_opt_f64(report.test_mse),
    ])?;
    w.flush()?;

    let mut w = csv::Writer::from_path(&coef_path)?;
    w.write_record(["index", "coefficient"])?;
    for &(j, b) in &report.beta_original {
        w.write_record([j.to_string(), fmt_f64(b)])?;
    }
    w.flush()?;
    Ok((summary_path, coef_path))
}

pub fn cmd_fit(x_path: &Path, y_path: &Path, opts: &FitOptions) -> Result<()> {
    let x = read_matrix(x_path, opts.header)?;
    let y = read_vector(y_path, opts.header)?;
    let report = fit_from_matrices(x, y, opts)?;
    let (summary_path, coef_path) = write_outputs(&report, opts)?;

    let sel = &report.selection;
    println!(
        "fit: n={} p={} train={} test={}",
        report.n, report.p, report.n_train, report.n_test
    );
    println!(
        "selected size {} (criterion minimizer {}, scan {}, safeguard {})",
        sel.final_s,
        sel.s_hat,
        sel.s_tilde.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
        sel.used_safeguard
    );
    let shown: Vec<String> = report
        .beta_original
        .iter()
        .take(20)
        .map(|&(j, _)| j.to_string())
        .collect();
    let ellipsis = if report.beta_original.len() > 20 { ", ..." } else { "" };
    println!("support (0-based): [{}{}]", shown.join(", "), ellipsis);
    match report.test_mse {
        Some(t) => println!(
            "sigma_hat={:.6} train_mse={:.6} test_mse={:.6}",
            sel.sigma_hat, report.train_mse, t
        ),
        None => println!("sigma_hat={:.6} train_mse={:.6}", sel.sigma_hat, report.train_mse),
    }
    println!("wrote {} and {}", summary_path.display(), coef_path.display());
    Ok(())
}
