//! CSV tables and the run manifest.
//!
//! Column sets are fixed; floats are written with the shortest representation
//! that round-trips, so identical results give identical bytes.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::experiments::{
    run_casestudy, run_highdim, run_lowdim_robustness, run_lowdim_tractability, run_uniform_convergence, HighDimCell,
    ProbeCell, SweepResult, UconvResult,
};
use crate::error::{Error, Result};
use crate::solvers::{SolveTrace, TractabilityReport};

pub const FIG1_GAPS: &str = "fig1_gaps.csv";
pub const FIG1_SUMMARY: &str = "fig1_summary.csv";
pub const FIG2_ERRORS: &str = "fig2_errors.csv";
pub const FIG3_GAPS: &str = "fig3_gaps.csv";
pub const FIG3_SUMMARY: &str = "fig3_summary.csv";
pub const CASE_PRED_ERROR: &str = "case_pred_error.csv";
pub const UCONV_TREND: &str = "uconv_trend.csv";
pub const UCONV_SLOPE: &str = "uconv_slope.csv";
pub const MANIFEST: &str = "manifest.json";

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

/// Shortest round-trip form; NaN (not applicable) becomes an empty field.
fn f(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn b(v: bool) -> String {
    u8::from(v).to_string()
}

fn strs(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Per-iteration gap curves: `delta, alpha, iter, gap_0 .. gap_{S-1}`; a cell
/// is empty once that start has stopped.
pub fn gaps_csv(cells: &[&ProbeCell]) -> Result<Vec<u8>> {
    let starts = cells.iter().map(|c| c.report.starts).max().unwrap_or(0);
    let mut header = strs(&["delta", "alpha", "iter"]);
    header.extend((0..starts).map(|s| format!("gap_{s}")));
    let mut rows = Vec::new();
    for c in cells {
        rows.extend(gap_rows(c.delta, c.alpha, &c.report.traces, starts));
    }
    csv_bytes(&header, rows)
}

fn gap_rows(delta: f64, alpha: f64, traces: &[SolveTrace<f64>], width: usize) -> Vec<Vec<String>> {
    let iters: BTreeSet<usize> = traces.iter().flat_map(|t| t.recorded_iterations.iter().copied()).collect();
    let mut cursors = vec![0usize; traces.len()];
    iters
        .into_iter()
        .map(|it| {
            let mut row = vec![f(delta), f(alpha), it.to_string()];
            for (s, t) in traces.iter().enumerate() {
                let cur = &mut cursors[s];
                if *cur < t.recorded_iterations.len() && t.recorded_iterations[*cur] == it {
                    row.push(f(t.iterates_norm_gap[*cur]));
                    *cur += 1;
                } else {
                    row.push(String::new());
                }
            }
            row.resize(width + 3, String::new());
            row
        })
        .collect()
}

fn probe_summary_fields(c: &ProbeCell) -> Vec<String> {
    let r: &TractabilityReport<f64> = &c.report;
    vec![
        f(c.delta),
        f(c.alpha),
        f(c.lambda_n),
        b(r.unique),
        f(r.max_pairwise_gap),
        r.clusters.len().to_string(),
        f(c.mean_iterations()),
        c.converged_starts().to_string(),
        b(r.any_diverged()),
    ]
}

const PROBE_SUMMARY_HEADER: [&str; 9] = [
    "delta",
    "alpha",
    "lambda_n",
    "unique",
    "max_pairwise_gap",
    "clusters",
    "mean_iterations",
    "converged_starts",
    "any_diverged",
];

pub fn probe_summary_csv(cells: &[ProbeCell]) -> Result<Vec<u8>> {
    csv_bytes(&strs(&PROBE_SUMMARY_HEADER), cells.iter().map(probe_summary_fields))
}

pub fn highdim_summary_csv(cells: &[HighDimCell]) -> Result<Vec<u8>> {
    let mut header = strs(&PROBE_SUMMARY_HEADER);
    header.extend(strs(&["precision", "recall", "selected", "top_s0_recovered"]));
    csv_bytes(
        &header,
        cells.iter().map(|c| {
            let mut row = probe_summary_fields(&c.probe);
            row.extend([
                f(c.support.precision),
                f(c.support.recall),
                c.support.selected.to_string(),
                b(c.support.top_s0_recovered),
            ]);
            row
        }),
    )
}

/// `error_column` names the mean column (`mean_error` or `mean_pred_error`).
pub fn sweep_csv(res: &SweepResult, error_column: &str) -> Result<Vec<u8>> {
    let header = strs(&[
        "delta",
        "alpha",
        error_column,
        "std_dev",
        "std_error",
        "unique_rate",
        "mean_iterations",
        "replicas",
    ]);
    csv_bytes(
        &header,
        res.cells.iter().map(|c| {
            vec![
                f(c.delta),
                f(c.alpha),
                f(c.mean_error),
                f(c.std_dev),
                f(c.std_error),
                f(c.unique_rate),
                f(c.mean_iterations),
                c.samples.to_string(),
            ]
        }),
    )
}

pub fn uconv_trend_csv(res: &UconvResult) -> Result<Vec<u8>> {
    csv_bytes(
        &strs(&["delta", "n", "sup_gap", "sup_gap_std", "replicas"]),
        res.rows
            .iter()
            .map(|r| vec![f(r.delta), r.n.to_string(), f(r.sup_gap), f(r.sup_gap_std), r.replicas.to_string()]),
    )
}

pub fn uconv_slope_csv(res: &UconvResult) -> Result<Vec<u8>> {
    csv_bytes(
        &strs(&["delta", "slope"]),
        res.slopes.iter().map(|s| vec![f(s.delta), f(s.slope)]),
    )
}

/// Record of one run, written next to its CSV outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub crate_version: String,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

/// In-memory result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    /// `(file name, contents)` for every CSV produced.
    pub files: Vec<(String, Vec<u8>)>,
}

fn summary_of_probes(cells: &[ProbeCell]) -> serde_json::Value {
    serde_json::Value::Array(
        cells
            .iter()
            .map(|c| {
                serde_json::json!({
                    "delta": c.delta,
                    "alpha": c.alpha,
                    "unique": c.report.unique,
                    "max_pairwise_gap": c.report.max_pairwise_gap,
                    "mean_iterations": c.mean_iterations(),
                })
            })
            .collect(),
    )
}

/// Run the experiment described by `cfg` and produce its tables.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let (files, summary) = match cfg.kind {
        ExperimentKind::LowDimTractability => {
            let cells = run_lowdim_tractability(cfg)?;
            let refs: Vec<&ProbeCell> = cells.iter().collect();
            (
                vec![
                    (FIG1_GAPS.to_string(), gaps_csv(&refs)?),
                    (FIG1_SUMMARY.to_string(), probe_summary_csv(&cells)?),
                ],
                summary_of_probes(&cells),
            )
        }
        ExperimentKind::LowDimRobustness => {
            let res = run_lowdim_robustness(cfg)?;
            (
                vec![(FIG2_ERRORS.to_string(), sweep_csv(&res, "mean_error")?)],
                serde_json::to_value(&res.cells)?,
            )
        }
        ExperimentKind::HighDim => {
            let cells = run_highdim(cfg)?;
            let refs: Vec<&ProbeCell> = cells.iter().map(|c| &c.probe).collect();
            let probes: Vec<ProbeCell> = cells.iter().map(|c| c.probe.clone()).collect();
            let mut summary = summary_of_probes(&probes);
            if let serde_json::Value::Array(items) = &mut summary {
                for (item, c) in items.iter_mut().zip(&cells) {
                    item["support"] = serde_json::to_value(c.support)?;
                }
            }
            (
                vec![
                    (FIG3_GAPS.to_string(), gaps_csv(&refs)?),
                    (FIG3_SUMMARY.to_string(), highdim_summary_csv(&cells)?),
                ],
                summary,
            )
        }
        ExperimentKind::CaseStudy => {
            let res = run_casestudy(cfg)?;
            (
                vec![(CASE_PRED_ERROR.to_string(), sweep_csv(&res, "mean_pred_error")?)],
                serde_json::to_value(&res.cells)?,
            )
        }
        ExperimentKind::UniformConvergence => {
            let res = run_uniform_convergence(cfg)?;
            (
                vec![
                    (UCONV_TREND.to_string(), uconv_trend_csv(&res)?),
                    (UCONV_SLOPE.to_string(), uconv_slope_csv(&res)?),
                ],
                serde_json::to_value(&res.slopes)?,
            )
        }
    };
    let manifest = RunManifest {
        kind: cfg.kind,
        seed: cfg.seed,
        config: cfg.clone(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs: files.iter().map(|(n, _)| n.clone()).collect(),
        summary,
    };
    Ok(RunOutcome { manifest, files })
}

/// [`execute`] and write every table plus `manifest.json` into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let outcome = execute(cfg)?;
    write_outcome(&outcome, &cfg.output_dir)?;
    Ok(outcome)
}

pub fn write_outcome(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, bytes) in &outcome.files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    let path = dir.join(MANIFEST);
    let json = serde_json::to_vec_pretty(&outcome.manifest)?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}
