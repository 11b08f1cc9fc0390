//! Simulation and case-study drivers that write figure-ready CSV tables.

mod config;
mod experiments;
mod output;

pub use config::{ExperimentConfig, ExperimentKind, GridFamily};
pub use experiments::{
    ball_grid, fitted_slope, load_case_table, prediction_mse, run_casestudy, run_highdim, run_lowdim_robustness,
    run_lowdim_tractability, run_uniform_convergence, support_metrics, HighDimCell, ProbeCell, SupportMetrics,
    SweepCell, SweepResult, UconvResult, UconvRow, UconvSlope, SUPPORT_THRESHOLD,
};
pub use output::{
    execute, gaps_csv, highdim_summary_csv, probe_summary_csv, run_experiment, sweep_csv, uconv_slope_csv,
    uconv_trend_csv, write_outcome, RunManifest, RunOutcome, CASE_PRED_ERROR, FIG1_GAPS, FIG1_SUMMARY,
    FIG2_ERRORS, FIG3_GAPS, FIG3_SUMMARY, MANIFEST, UCONV_SLOPE, UCONV_TREND,
};
