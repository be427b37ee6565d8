//! Benchmark runner: seeded replications over a sweep grid, fanned out on a
//! thread pool, then written in a canonical order so reruns and different
//! job counts produce byte-identical CSVs.

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use fahtp::datagen::{gen_scenario, Noise};
use fahtp::{
    aggregate, build_path_with, evaluate, ic_value, oracle_estimator, select_on_path, stats,
    EvalReport, HtpConfig, Init, PathOptions,
};

use crate::csvio::{fmt_f64, fmt_opt_f64};
use crate::errors::{CliError, Result};
use crate::plot::{line_chart, Series};
use crate::scenario::{manifest_toml, ExperimentName, ResolvedSpec, Sweep};
use crate::seeds::replication_seed;

pub fn run(spec: &ResolvedSpec, jobs: Option<usize>) -> Result<()> {
    fs::create_dir_all(&spec.output_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", spec.output_dir.display())))?;
    fs::write(spec.output_dir.join("manifest.toml"), manifest_toml(spec)?)
        .map_err(|e| CliError::Data(format!("cannot write manifest: {e}")))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Data(format!("cannot build thread pool: {e}")))?;
    pool.install(|| match spec.name {
        ExperimentName::MinSignalPath => run_min_signal(spec),
        ExperimentName::AdaptiveBenefit | ExperimentName::SampleSizeSweep => run_benchmark(spec),
    })
}

fn open_csv(dir: &PathBuf, file: &str) -> Result<csv::Writer<fs::File>> {
    let path = dir.join(file);
    csv::Writer::from_path(&path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

// --- per-size path experiment ---------------------------------------------

struct SizeRow {
    replication: usize,
    seed: u64,
    s: usize,
    failed: bool,
    lambda_min: Option<f64>,
    ic: Option<f64>,
    loss: Option<f64>,
    rss: Option<f64>,
    converged: Option<bool>,
}

struct TraceRow {
    replication: usize,
    s: usize,
    t: usize,
    support_size: usize,
    loss: f64,
    min_signal: f64,
}

fn run_min_signal(spec: &ResolvedSpec) -> Result<()> {
    let per_rep: Vec<(Vec<SizeRow>, Vec<TraceRow>)> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| -> Result<(Vec<SizeRow>, Vec<TraceRow>)> {
            let seed = replication_seed(spec.base_seed, 0, rep);
            let config = spec.scenario_at(None, None, seed);
            let (data, _truth) = gen_scenario(&config)?;
            let (n, p) = (data.n(), data.p());
            let mut rows = Vec::with_capacity(spec.s_max);
            let mut traces = Vec::new();
            for s in 1..=spec.s_max {
                let cfg = HtpConfig {
                    s,
                    max_iter: spec.max_iter,
                    init: Init::Zero,
                    trace: true,
                    fixed_iters: spec.fixed_iters,
                };
                match fahtp::htp_run(&data, &cfg) {
                    Ok(res) => {
                        let est = &res.estimate;
                        rows.push(SizeRow {
                            replication: rep,
                            seed,
                            s,
                            failed: false,
                            lambda_min: Some(est.min_signal()),
                            ic: Some(ic_value(est.rss, n, p, s, spec.k_const)?),
                            loss: Some(est.rss / (2.0 * n as f64)),
                            rss: Some(est.rss),
                            converged: Some(res.trace.converged),
                        });
                        for step in &res.trace.iterations {
                            traces.push(TraceRow {
                                replication: rep,
                                s,
                                t: step.t,
                                support_size: step.support.len(),
                                loss: step.loss,
                                min_signal: step.min_signal,
                            });
                        }
                    }
                    // A rank-deficient size stays on record as a failed row,
                    // matching how path construction treats it.
                    Err(_) => rows.push(SizeRow {
                        replication: rep,
                        seed,
                        s,
                        failed: true,
                        lambda_min: None,
                        ic: None,
                        loss: None,
                        rss: None,
                        converged: None,
                    }),
                }
            }
            Ok((rows, traces))
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<SizeRow> = Vec::new();
    let mut traces: Vec<TraceRow> = Vec::new();
    for (r, t) in per_rep {
        rows.extend(r);
        traces.extend(t);
    }
    rows.sort_by_key(|r| (r.replication, r.s));
    traces.sort_by_key(|r| (r.replication, r.s, r.t));

    let mut w = open_csv(&spec.output_dir, "results.csv")?;
    w.write_record([
        "experiment", "replication", "seed", "s", "failed", "lambda_min", "ic", "loss", "rss",
        "converged",
    ])?;
    for r in &rows {
        w.write_record([
            spec.name.as_str().to_string(),
            r.replication.to_string(),
            r.seed.to_string(),
            r.s.to_string(),
            r.failed.to_string(),
            fmt_opt_f64(r.lambda_min),
            fmt_opt_f64(r.ic),
            fmt_opt_f64(r.loss),
            fmt_opt_f64(r.rss),
            r.converged.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(CliError::from)?;

    let mut w = open_csv(&spec.output_dir, "traces.csv")?;
    w.write_record(["replication", "s", "t", "support_size", "loss", "min_signal"])?;
    for r in &traces {
        w.write_record([
            r.replication.to_string(),
            r.s.to_string(),
            r.t.to_string(),
            r.support_size.to_string(),
            fmt_f64(r.loss),
            fmt_f64(r.min_signal),
        ])?;
    }
    w.flush().map_err(CliError::from)?;

    // Coefficients live at k * u for k in the configured band, so twice the
    // one-draw noise threshold u separates kept signal from kept noise.
    let separation = match spec.noise {
        Noise::Gaussian { sigma } => {
            Some(2.0 * sigma * (2.0 * (spec.p as f64).ln() / spec.n as f64).sqrt())
        }
        Noise::SnrCalibrated { .. } => None,
    };

    let mut w = open_csv(&spec.output_dir, "summary.csv")?;
    w.write_record([
        "s",
        "replications",
        "failed",
        "lambda_min_mean",
        "lambda_min_median",
        "lambda_min_sd",
        "ic_mean",
        "ic_median",
        "ic_sd",
        "separation_threshold",
    ])?;
    let mut median_lambda: Vec<(f64, f64)> = Vec::new();
    for s in 1..=spec.s_max {
        let at_s: Vec<&SizeRow> = rows.iter().filter(|r| r.s == s).collect();
        let failed = at_s.iter().filter(|r| r.failed).count();
        let lams: Vec<f64> = at_s.iter().filter_map(|r| r.lambda_min).collect();
        let ics: Vec<f64> = at_s.iter().filter_map(|r| r.ic).collect();
        let (lam_s, ic_s) = if lams.is_empty() {
            (None, None)
        } else {
            (Some(stats(&lams)), Some(stats(&ics)))
        };
        if let Some(st) = &lam_s {
            median_lambda.push((s as f64, st.median));
        }
        w.write_record([
            s.to_string(),
            (at_s.len() - failed).to_string(),
            failed.to_string(),
            fmt_opt_f64(lam_s.as_ref().map(|st| st.mean)),
            fmt_opt_f64(lam_s.as_ref().map(|st| st.median)),
            fmt_opt_f64(lam_s.as_ref().map(|st| st.sd)),
            fmt_opt_f64(ic_s.as_ref().map(|st| st.mean)),
            fmt_opt_f64(ic_s.as_ref().map(|st| st.median)),
            fmt_opt_f64(ic_s.as_ref().map(|st| st.sd)),
            fmt_opt_f64(separation),
        ])?;
    }
    w.flush().map_err(CliError::from)?;

    let mut series = vec![Series { label: "median smallest coefficient".into(), points: median_lambda }];
    if let Some(sep) = separation {
        series.push(Series {
            label: "separation threshold".into(),
            points: vec![(1.0, sep), (spec.s_max as f64, sep)],
        });
    }
    line_chart(
        &spec.output_dir.join("min_signal_path.svg"),
        "smallest kept coefficient by model size",
        "model size s",
        "|beta|_min",
        &series,
    )?;

    // Iteration view for the first replication: one line per size, only the
    // planted size labeled.
    let mut iter_series: Vec<Series> = Vec::new();
    for s in 1..=spec.s_max {
        let points: Vec<(f64, f64)> = traces
            .iter()
            .filter(|r| r.replication == 0 && r.s == s)
            .map(|r| (r.t as f64, r.min_signal))
            .collect();
        if points.is_empty() {
            continue;
        }
        let label = if s == spec.s_star { format!("s = {s} (planted)") } else { String::new() };
        iter_series.push(Series { label, points });
    }
    line_chart(
        &spec.output_dir.join("min_signal_iterations.svg"),
        "smallest kept coefficient across iterations (replication 0)",
        "iteration t",
        "|beta|_min",
        &iter_series,
    )?;

    println!(
        "{}: {} replications, sizes 1..={}, {} failed rows",
        spec.name,
        spec.replications,
        spec.s_max,
        rows.iter().filter(|r| r.failed).count()
    );
    println!(
        "wrote results.csv, traces.csv, summary.csv, min_signal_path.svg, min_signal_iterations.svg, manifest.toml in {}",
        spec.output_dir.display()
    );
    Ok(())
}

// --- selector benchmarks ---------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Estimator {
    Fahtp,
    IcOnly,
    Oracle,
}

impl Estimator {
    fn as_str(self) -> &'static str {
        match self {
            Estimator::Fahtp => "fahtp",
            Estimator::IcOnly => "ic",
            Estimator::Oracle => "oracle",
        }
    }
}

struct BenchRow {
    sweep_value: u64,
    replication: usize,
    seed: u64,
    estimator: Estimator,
    failed: bool,
    final_s: Option<usize>,
    s_hat: Option<usize>,
    sigma_hat: Option<f64>,
    used_safeguard: Option<bool>,
    report: Option<EvalReport>,
}

fn failed_row(sweep_value: u64, replication: usize, seed: u64, estimator: Estimator) -> BenchRow {
    BenchRow {
        sweep_value,
        replication,
        seed,
        estimator,
        failed: true,
        final_s: None,
        s_hat: None,
        sigma_hat: None,
        used_safeguard: None,
        report: None,
    }
}

fn run_benchmark(spec: &ResolvedSpec) -> Result<()> {
    let (sweep_name, sweep_values): (&str, Vec<u64>) = match &spec.sweep {
        Sweep::KValues(ks) => ("k", ks.clone()),
        Sweep::NValues(ns) => ("n", ns.iter().map(|&n| n as u64).collect()),
        Sweep::Sizes => unreachable!("size paths use the dedicated runner"),
    };

    let jobs: Vec<(u64, usize)> = sweep_values
        .iter()
        .flat_map(|&v| (0..spec.replications).map(move |rep| (v, rep)))
        .collect();

    let rows: Vec<Vec<BenchRow>> = jobs
        .into_par_iter()
        .map(|(value, rep)| -> Result<Vec<BenchRow>> {
            let seed = replication_seed(spec.base_seed, value, rep);
            let config = match spec.sweep {
                Sweep::KValues(_) => spec.scenario_at(None, Some(value), seed),
                _ => spec.scenario_at(Some(value as usize), None, seed),
            };
            let (data, truth) = gen_scenario(&config)?;
            let options = PathOptions { max_iter: spec.max_iter, fixed_iters: spec.fixed_iters };
            let mut out = Vec::with_capacity(3);

            match build_path_with(&data, spec.s_max, spec.k_const, &options) {
                Ok(path) if !path.entries.iter().all(|e| e.failed) => {
                    let sel = select_on_path(&data, &path, spec.kappa)?;
                    let sel_report = evaluate(&sel.final_estimate, &truth)?;
                    out.push(BenchRow {
                        sweep_value: value,
                        replication: rep,
                        seed,
                        estimator: Estimator::Fahtp,
                        failed: false,
                        final_s: Some(sel.final_s),
                        s_hat: Some(sel.s_hat),
                        sigma_hat: Some(sel.sigma_hat),
                        used_safeguard: Some(sel.used_safeguard),
                        report: Some(sel_report),
                    });
                    let at_hat = path.entry(sel.s_hat).expect("criterion minimizer on path");
                    let ic_report = evaluate(&at_hat.estimate, &truth)?;
                    out.push(BenchRow {
                        sweep_value: value,
                        replication: rep,
                        seed,
                        estimator: Estimator::IcOnly,
                        failed: false,
                        final_s: Some(at_hat.s),
                        s_hat: Some(sel.s_hat),
                        sigma_hat: Some(sel.sigma_hat),
                        used_safeguard: None,
                        report: Some(ic_report),
                    });
                }
                // Whole path rank deficient, or an unexpected solver fault:
                // keep the replication on record instead of aborting the run.
                Ok(_) | Err(_) => {
                    out.push(failed_row(value, rep, seed, Estimator::Fahtp));
                    out.push(failed_row(value, rep, seed, Estimator::IcOnly));
                }
            }

            match oracle_estimator(&data, &truth) {
                Ok(est) => {
                    let report = evaluate(&est, &truth)?;
                    out.push(BenchRow {
                        sweep_value: value,
                        replication: rep,
                        seed,
                        estimator: Estimator::Oracle,
                        failed: false,
                        final_s: Some(truth.support_star.len()),
                        s_hat: None,
                        sigma_hat: None,
                        used_safeguard: None,
                        report: Some(report),
                    });
                }
                Err(_) => out.push(failed_row(value, rep, seed, Estimator::Oracle)),
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<BenchRow> = rows.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.sweep_value, r.replication, r.estimator));

    let mut w = open_csv(&spec.output_dir, "results.csv")?;
    w.write_record([
        "experiment",
        sweep_name,
        "replication",
        "seed",
        "estimator",
        "failed",
        "final_s",
        "s_hat",
        "sigma_hat",
        "used_safeguard",
        "ee",
        "se",
        "tpr",
        "fpr",
        "mcc",
    ])?;
    for r in &rows {
        let rep = r.report.as_ref();
        w.write_record([
            spec.name.as_str().to_string(),
            r.sweep_value.to_string(),
            r.replication.to_string(),
            r.seed.to_string(),
            r.estimator.as_str().to_string(),
            r.failed.to_string(),
            r.final_s.map(|v| v.to_string()).unwrap_or_default(),
            r.s_hat.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt_f64(r.sigma_hat),
            r.used_safeguard.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt_f64(rep.map(|e| e.ee)),
            rep.map(|e| e.se.to_string()).unwrap_or_default(),
            fmt_opt_f64(rep.map(|e| e.tpr)),
            fmt_opt_f64(rep.map(|e| e.fpr)),
            fmt_opt_f64(rep.map(|e| e.mcc)),
        ])?;
    }
    w.flush().map_err(CliError::from)?;

    let mut w = open_csv(&spec.output_dir, "summary.csv")?;
    w.write_record([
        "experiment",
        sweep_name,
        "estimator",
        "count",
        "failed",
        "ee_mean",
        "ee_median",
        "ee_sd",
        "se_mean",
        "se_median",
        "se_sd",
        "tpr_mean",
        "tpr_median",
        "tpr_sd",
        "fpr_mean",
        "fpr_median",
        "fpr_sd",
        "mcc_mean",
        "mcc_median",
        "mcc_sd",
        "success_exact",
        "success_se_zero",
    ])?;
    // (estimator, sweep value) -> points for the figures
    let mut ee_series: Vec<(Estimator, Vec<(f64, f64)>)> =
        [Estimator::Fahtp, Estimator::IcOnly, Estimator::Oracle]
            .into_iter()
            .map(|e| (e, Vec::new()))
            .collect();
    let mut mcc_series = ee_series.clone();
    for &value in &sweep_values {
        for est in [Estimator::Fahtp, Estimator::IcOnly, Estimator::Oracle] {
            let group: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.sweep_value == value && r.estimator == est)
                .collect();
            let failed = group.iter().filter(|r| r.failed).count();
            let reports: Vec<EvalReport> =
                group.iter().filter_map(|r| r.report.clone()).collect();
            let mut record = vec![
                spec.name.as_str().to_string(),
                value.to_string(),
                est.as_str().to_string(),
                reports.len().to_string(),
                failed.to_string(),
            ];
            if reports.is_empty() {
                record.extend(std::iter::repeat_n(String::new(), 17));
            } else {
                let sum = aggregate(&reports)?;
                for st in [&sum.ee, &sum.se, &sum.tpr, &sum.fpr, &sum.mcc] {
                    record.push(fmt_f64(st.mean));
                    record.push(fmt_f64(st.median));
                    record.push(fmt_f64(st.sd));
                }
                record.push(fmt_f64(sum.success_exact));
                record.push(fmt_f64(sum.success_se_zero));
                let x = value as f64;
                ee_series.iter_mut().find(|(e, _)| *e == est).unwrap().1.push((x, sum.ee.median));
                mcc_series.iter_mut().find(|(e, _)| *e == est).unwrap().1.push((x, sum.mcc.mean));
            }
            w.write_record(&record)?;
        }
    }
    w.flush().map_err(CliError::from)?;

    let to_series = |pairs: Vec<(Estimator, Vec<(f64, f64)>)>| -> Vec<Series> {
        pairs
            .into_iter()
            .filter(|(_, pts)| !pts.is_empty())
            .map(|(e, points)| Series { label: e.as_str().to_string(), points })
            .collect()
    };
    let ee_plot = spec.output_dir.join(format!("{}_ee.svg", spec.name));
    line_chart(
        &ee_plot,
        "median estimation error",
        sweep_name,
        "median ||b - beta*||",
        &to_series(ee_series),
    )?;
    let mcc_plot = spec.output_dir.join(format!("{}_mcc.svg", spec.name));
    line_chart(
        &mcc_plot,
        "mean support recovery (MCC)",
        sweep_name,
        "mean MCC",
        &to_series(mcc_series),
    )?;

    println!(
        "{}: {} sweep points x {} replications, {} failed rows",
        spec.name,
        sweep_values.len(),
        spec.replications,
        rows.iter().filter(|r| r.failed).count()
    );
    println!(
        "wrote results.csv, summary.csv, {}, {}, manifest.toml in {}",
        ee_plot.file_name().unwrap().to_string_lossy(),
        mcc_plot.file_name().unwrap().to_string_lossy(),
        spec.output_dir.display()
    );
    Ok(())
}
