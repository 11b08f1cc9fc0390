use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::data::{
    corrupt_responses, generate, load_table, split, Dataset, DesignSpec, Standardizer, TableSchema,
};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::risk::empirical_gradient;
use crate::rng::{derive_seed, Domain};
use crate::scalar::{distance, norm2};
use crate::solvers::{probe_tractability_with, Execution, SolverConfig, TractabilityReport};

/// Coefficients with `|θ_j|` above this count as selected.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

fn check_kind(cfg: &ExperimentConfig, want: ExperimentKind) -> Result<()> {
    if cfg.kind != want {
        return Err(Error::InvalidConfig(format!("expected a {want:?} config, got {:?}", cfg.kind)));
    }
    cfg.validate()
}

/// Dataset seed for replica `r`; shared by every (δ, α) cell so that cells
/// differ only in the contamination draws.
fn data_seed(seed: u64, replica: usize) -> u64 {
    derive_seed(seed, Domain::Replica, replica as u64, 0)
}

fn start_seed(seed: u64, replica: usize) -> u64 {
    derive_seed(seed, Domain::Start, replica as u64, 0)
}

fn design_for(cfg: &ExperimentConfig) -> &DesignSpec {
    &cfg.design
}

/// One multi-start probe at a grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCell {
    pub delta: f64,
    pub alpha: f64,
    pub lambda_n: f64,
    pub report: TractabilityReport<f64>,
}

impl ProbeCell {
    pub fn unique(&self) -> bool {
        self.report.unique
    }

    pub fn mean_iterations(&self) -> f64 {
        self.report.mean_iterations()
    }

    pub fn converged_starts(&self) -> usize {
        self.report.traces.iter().filter(|t| t.converged).count()
    }
}

fn grid(cfg: &ExperimentConfig) -> Vec<(f64, f64)> {
    cfg.delta_grid
        .iter()
        .flat_map(|&d| cfg.alpha_grid.iter().map(move |&a| (d, a)))
        .collect()
}

fn probe_cells(cfg: &ExperimentConfig) -> Result<Vec<ProbeCell>> {
    let solver = SolverConfig {
        seed: start_seed(cfg.seed, 0),
        ..cfg.solver.clone()
    };
    let cells = grid(cfg);
    let results = cfg.execution.map(cells, |(delta, alpha)| -> Result<ProbeCell> {
        let ds: Dataset<f64> = generate(design_for(cfg), &cfg.noise.with_delta(delta), data_seed(cfg.seed, 0))?;
        let spec = cfg.loss(alpha)?;
        let report = probe_tractability_with(&ds, &spec, &solver, cfg.starts, cfg.cluster_tol, Execution::Sequential)?;
        Ok(ProbeCell {
            delta,
            alpha,
            lambda_n: solver.lambda_n,
            report,
        })
    });
    results.into_iter().collect()
}

/// Multi-start probe on one dataset per (δ, α); every δ shares the design
/// matrix and the starting points.
pub fn run_lowdim_tractability(cfg: &ExperimentConfig) -> Result<Vec<ProbeCell>> {
    check_kind(cfg, ExperimentKind::LowDimTractability)?;
    probe_cells(cfg)
}

/// Support recovery of a sparse estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    /// Fraction of selected coordinates that are truly nonzero (1 when none are selected).
    pub precision: f64,
    /// Fraction of true nonzeros that are selected.
    pub recall: f64,
    /// Every true nonzero is among the `s0` largest magnitudes.
    pub top_s0_recovered: bool,
    pub selected: usize,
}

pub fn support_metrics(theta_hat: &[f64], theta0: &[f64], threshold: f64) -> SupportMetrics {
    let truth: Vec<bool> = theta0.iter().map(|v| *v != 0.0).collect();
    let s0 = truth.iter().filter(|&&b| b).count();
    let selected: Vec<bool> = theta_hat.iter().map(|v| v.abs() > threshold).collect();
    let n_sel = selected.iter().filter(|&&b| b).count();
    let hits = selected.iter().zip(&truth).filter(|(s, t)| **s && **t).count();
    let mut order: Vec<usize> = (0..theta_hat.len()).collect();
    order.sort_by(|&a, &b| theta_hat[b].abs().total_cmp(&theta_hat[a].abs()).then(a.cmp(&b)));
    let top_s0_recovered = s0 > 0
        && order[..s0].iter().all(|&j| truth[j])
        && order[..s0].iter().all(|&j| theta_hat[j].abs() > threshold);
    SupportMetrics {
        precision: if n_sel == 0 { 1.0 } else { hits as f64 / n_sel as f64 },
        recall: if s0 == 0 { 1.0 } else { hits as f64 / s0 as f64 },
        top_s0_recovered,
        selected: n_sel,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighDimCell {
    pub probe: ProbeCell,
    /// Metrics of the lowest-objective final.
    pub support: SupportMetrics,
}

/// Proximal-gradient multi-start probe on the sparse high-dimensional design.
pub fn run_highdim(cfg: &ExperimentConfig) -> Result<Vec<HighDimCell>> {
    check_kind(cfg, ExperimentKind::HighDim)?;
    let theta0 = cfg.design.theta0.clone();
    Ok(probe_cells(cfg)?
        .into_iter()
        .map(|probe| {
            let best = probe.report.best_final();
            let support = support_metrics(best.as_slice().expect("contiguous"), &theta0, SUPPORT_THRESHOLD);
            HighDimCell { probe, support }
        })
        .collect())
}

/// Replicated result at one (δ, α) grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub delta: f64,
    pub alpha: f64,
    /// Mean of the per-replica error (estimation or prediction).
    pub mean_error: f64,
    /// Sample standard deviation across replicas.
    pub std_dev: f64,
    /// `std_dev / sqrt(replicas)`.
    pub std_error: f64,
    pub unique_rate: f64,
    pub mean_iterations: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, delta: f64, alpha: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.delta == delta && c.alpha == alpha)
    }
}

struct ReplicaOutcome {
    error: f64,
    unique: bool,
    mean_iterations: f64,
}

fn aggregate(delta: f64, alpha: f64, outcomes: &[ReplicaOutcome]) -> SweepCell {
    let k = outcomes.len() as f64;
    let mean = outcomes.iter().map(|o| o.error).sum::<f64>() / k;
    let var = if outcomes.len() > 1 {
        outcomes.iter().map(|o| (o.error - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    SweepCell {
        delta,
        alpha,
        mean_error: mean,
        std_dev: var.sqrt(),
        std_error: (var / k).sqrt(),
        unique_rate: outcomes.iter().filter(|o| o.unique).count() as f64 / k,
        mean_iterations: outcomes.iter().map(|o| o.mean_iterations).sum::<f64>() / k,
        samples: outcomes.len(),
    }
}

/// Run `replica_fn` for every (cell, replica) pair and aggregate per cell in
/// grid order.
fn replicated_sweep(
    cfg: &ExperimentConfig,
    replica_fn: impl Fn(f64, f64, usize) -> Result<ReplicaOutcome> + Sync + Send,
) -> Result<SweepResult> {
    let cells = grid(cfg);
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicas).map(move |r| (c, r)))
        .collect();
    let outcomes = cfg
        .execution
        .map(tasks, |(c, r)| replica_fn(cells[c].0, cells[c].1, r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        cells: cells
            .iter()
            .enumerate()
            .map(|(c, &(d, a))| aggregate(d, a, &outcomes[c * cfg.replicas..(c + 1) * cfg.replicas]))
            .collect(),
    })
}

/// Estimation error `||θ̂ - θ₀||₂` of the lowest-objective final over random
/// starts, averaged over independent datasets.
pub fn run_lowdim_robustness(cfg: &ExperimentConfig) -> Result<SweepResult> {
    check_kind(cfg, ExperimentKind::LowDimRobustness)?;
    let theta0 = cfg.design.theta0.clone();
    replicated_sweep(cfg, |delta, alpha, r| {
        let ds: Dataset<f64> = generate(&cfg.design, &cfg.noise.with_delta(delta), data_seed(cfg.seed, r))?;
        let solver = SolverConfig {
            seed: start_seed(cfg.seed, r),
            ..cfg.solver.clone()
        };
        let rep = probe_tractability_with(&ds, &cfg.loss(alpha)?, &solver, cfg.starts, cfg.cluster_tol, Execution::Sequential)?;
        Ok(ReplicaOutcome {
            error: distance(rep.best_final().as_slice().expect("contiguous"), &theta0),
            unique: rep.unique,
            mean_iterations: rep.mean_iterations(),
        })
    })
}

/// Load the case-study table: `.csv` files use the header schema, anything
/// else the whitespace format with the response last.
pub fn load_case_table(path: &std::path::Path) -> Result<Dataset<f64>> {
    let schema = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => TableSchema::CsvHeader,
        _ => TableSchema::WhitespaceLastColResponse,
    };
    load_table(path, schema)
}

/// Random train/test splits of a real table. Features are standardized with
/// training statistics; the response is centered and scaled the same way so
/// that α has the same meaning as in the simulations. Training responses are
/// then corrupted, test responses are not.
pub fn run_casestudy(cfg: &ExperimentConfig) -> Result<SweepResult> {
    check_kind(cfg, ExperimentKind::CaseStudy)?;
    let path = cfg.dataset_path.as_ref().expect("validated");
    let table = load_case_table(path)?;
    if cfg.n_train >= table.n() {
        return Err(Error::InvalidConfig(format!(
            "n_train = {} must be smaller than the table size {}",
            cfg.n_train,
            table.n()
        )));
    }
    replicated_sweep(cfg, |delta, alpha, r| {
        let (train, test) = split(&table, cfg.n_train, derive_seed(cfg.seed, Domain::Split, r as u64, 0))?;
        let scaler = Standardizer::fit(&train)?;
        let (train, test) = (scaler.apply(&train)?, scaler.apply(&test)?);
        let (mu, sd) = response_moments(train.y());
        let train = train.with_responses(train.y().mapv(|v| (v - mu) / sd))?;
        let test = test.with_responses(test.y().mapv(|v| (v - mu) / sd))?;
        let noisy = corrupt_responses(
            &train,
            &cfg.noise.with_delta(delta),
            derive_seed(cfg.seed, Domain::Corrupt, r as u64, 0),
        )?;
        let solver = SolverConfig {
            seed: start_seed(cfg.seed, r),
            ..cfg.solver.clone()
        };
        let rep = probe_tractability_with(&noisy, &cfg.loss(alpha)?, &solver, cfg.starts, cfg.cluster_tol, Execution::Sequential)?;
        Ok(ReplicaOutcome {
            error: prediction_mse(&test, rep.best_final()),
            unique: rep.unique,
            mean_iterations: rep.mean_iterations(),
        })
    })
}

fn response_moments(y: &Array1<f64>) -> (f64, f64) {
    let n = y.len() as f64;
    let mu = y.sum() / n;
    let var = y.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mu, if var > 0.0 { var.sqrt() } else { 1.0 })
}

/// Test mean squared prediction error.
pub fn prediction_mse(test: &Dataset<f64>, theta: &Array1<f64>) -> f64 {
    let pred = test.x().dot(theta);
    (test.y() - &pred).mapv(|e| e * e).sum() / test.n() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UconvRow {
    pub delta: f64,
    pub n: usize,
    /// Replica mean of `sup_θ ||∇R_n(θ) - ∇R_N(θ)||₂`.
    pub sup_gap: f64,
    pub sup_gap_std: f64,
    pub replicas: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UconvSlope {
    pub delta: f64,
    /// Least-squares slope of `log sup_gap` against `log n`.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UconvResult {
    pub rows: Vec<UconvRow>,
    pub slopes: Vec<UconvSlope>,
    pub population_size: usize,
    pub grid_points: usize,
}

impl UconvResult {
    pub fn slope(&self, delta: f64) -> Option<f64> {
        self.slopes.iter().find(|s| s.delta == delta).map(|s| s.slope)
    }

    pub fn sup_gaps(&self, delta: f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.delta == delta).map(|r| r.sup_gap).collect()
    }
}

/// Points of a regular grid on `[-radius, radius]^p` that lie in the ball.
pub fn ball_grid(p: usize, per_axis: usize, radius: f64) -> Vec<Array1<f64>> {
    let axis: Vec<f64> = (0..per_axis)
        .map(|k| -radius + 2.0 * radius * k as f64 / (per_axis - 1) as f64)
        .collect();
    let total = per_axis.pow(p as u32);
    (0..total)
        .map(|mut idx| {
            Array1::from_iter((0..p).map(|_| {
                let v = axis[idx % per_axis];
                idx /= per_axis;
                v
            }))
        })
        .filter(|t| norm2(t.as_slice().expect("contiguous")) <= radius * (1.0 + 1e-12))
        .collect()
}

/// Least-squares slope of `y` on `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Empirical uniform-convergence check for the sample gradient. The
/// population gradient is proxied by a sample of `64 · max(n_ladder)` rows.
pub fn run_uniform_convergence(cfg: &ExperimentConfig) -> Result<UconvResult> {
    check_kind(cfg, ExperimentKind::UniformConvergence)?;
    let spec = cfg.loss(cfg.alpha_grid[0])?;
    let n_max = *cfg.n_ladder.iter().max().expect("validated nonempty");
    let big_n = 64 * n_max;
    let thetas = ball_grid(cfg.design.p, cfg.grid_per_axis, cfg.grid_radius);
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for (di, &delta) in cfg.delta_grid.iter().enumerate() {
        let noise = cfg.noise.with_delta(delta);
        let pop_design = DesignSpec { n: big_n, ..cfg.design.clone() };
        let pop: Dataset<f64> = generate(&pop_design, &noise, derive_seed(cfg.seed, Domain::Population, di as u64, 0))?;
        let pop_grads = gradients(&pop, &spec, &thetas, cfg.execution)?;
        drop(pop);
        let tasks: Vec<(usize, usize)> = (0..cfg.n_ladder.len())
            .flat_map(|k| (0..cfg.replicas).map(move |r| (k, r)))
            .collect();
        let sups = cfg
            .execution
            .map(tasks, |(k, r)| -> Result<f64> {
                let n = cfg.n_ladder[k];
                let design = DesignSpec { n, ..cfg.design.clone() };
                let seed = derive_seed(cfg.seed, Domain::Replica, (di * 1_000_003 + n) as u64, r as u64);
                let ds: Dataset<f64> = generate(&design, &noise, seed)?;
                let mut sup = 0.0f64;
                for (theta, g_pop) in thetas.iter().zip(&pop_grads) {
                    let g = empirical_gradient(&ds, &spec, theta)?;
                    sup = sup.max(distance(g.as_slice().expect("contiguous"), g_pop.as_slice().expect("contiguous")));
                }
                Ok(sup)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut log_n = Vec::new();
        let mut log_gap = Vec::new();
        for (k, &n) in cfg.n_ladder.iter().enumerate() {
            let s = &sups[k * cfg.replicas..(k + 1) * cfg.replicas];
            let m = s.iter().sum::<f64>() / s.len() as f64;
            let sd = if s.len() > 1 {
                (s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(UconvRow {
                delta,
                n,
                sup_gap: m,
                sup_gap_std: sd,
                replicas: s.len(),
            });
            log_n.push((n as f64).ln());
            log_gap.push(m.ln());
        }
        slopes.push(UconvSlope {
            delta,
            slope: fitted_slope(&log_n, &log_gap),
        });
    }
    Ok(UconvResult {
        rows,
        slopes,
        population_size: big_n,
        grid_points: thetas.len(),
    })
}

fn gradients(
    ds: &Dataset<f64>,
    spec: &LossSpec<f64>,
    thetas: &[Array1<f64>],
    exec: Execution,
) -> Result<Vec<Array1<f64>>> {
    match exec {
        Execution::Sequential => thetas.iter().map(|t| empirical_gradient(ds, spec, t)).collect(),
        Execution::Parallel => thetas.par_iter().map(|t| empirical_gradient(ds, spec, t)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DesignDistribution, GrossErrorSpec};

    #[test]
    fn support_metrics_cases() {
        let theta0 = [1.0, 1.0, 0.0, 0.0];
        let m = support_metrics(&[0.9, 0.5, 0.0, 0.2], &theta0, 1e-6);
        assert_eq!(m.selected, 3);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.recall, 1.0);
        assert!(m.top_s0_recovered);
        let m = support_metrics(&[0.9, 0.1, 0.0, 0.2], &theta0, 1e-6);
        assert!(!m.top_s0_recovered);
        let m = support_metrics(&[0.0; 4], &theta0, 1e-6);
        assert_eq!((m.recall, m.precision, m.top_s0_recovered), (0.0, 1.0, false));
    }

    #[test]
    fn ball_grid_is_inside_and_symmetric() {
        let g = ball_grid(2, 9, 3.0);
        assert!(g.iter().all(|t| norm2(t.as_slice().unwrap()) <= 3.0 + 1e-12));
        assert!(g.iter().any(|t| t[0] == 0.0 && t[1] == 0.0));
        // count the lattice points (-3 + 0.75 i, -3 + 0.75 j) inside the disc
        let brute = (0..81)
            .filter(|k| {
                let (a, b) = (-3.0 + 0.75 * (k % 9) as f64, -3.0 + 0.75 * (k / 9) as f64);
                a * a + b * b <= 9.0 + 1e-9
            })
            .count();
        assert_eq!(g.len(), brute);
    }

    #[test]
    fn fitted_slope_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 - 0.5 * v).collect();
        assert!((fitted_slope(&x, &y) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn aggregate_statistics() {
        let outs: Vec<ReplicaOutcome> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&e| ReplicaOutcome { error: e, unique: e < 2.5, mean_iterations: 10.0 })
            .collect();
        let c = aggregate(0.1, 0.2, &outs);
        assert_eq!(c.mean_error, 2.0);
        assert_eq!(c.std_dev, 1.0);
        assert!((c.std_error - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((c.unique_rate - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.samples, 3);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let cfg = ExperimentConfig::preset(ExperimentKind::HighDim);
        assert!(run_lowdim_tractability(&cfg).is_err());
    }

    #[test]
    fn tiny_robustness_sweep_shape() {
        let cfg = ExperimentConfig {
            delta_grid: vec![0.0, 0.2],
            alpha_grid: vec![0.0, 0.1],
            replicas: 3,
            starts: 2,
            design: DesignSpec {
                n: 60,
                p: 3,
                distribution: DesignDistribution::GaussianIsotropic { tau: 1.0 },
                theta0: vec![0.5; 3],
            },
            noise: GrossErrorSpec::default(),
            ..ExperimentConfig::preset(ExperimentKind::LowDimRobustness)
        };
        let res = run_lowdim_robustness(&cfg).unwrap();
        assert_eq!(res.cells.len(), 4);
        for c in &res.cells {
            assert_eq!(c.samples, 3);
            assert!(c.mean_error >= 0.0 && c.std_dev.is_finite());
        }
        let seq = run_lowdim_robustness(&ExperimentConfig { execution: Execution::Sequential, ..cfg }).unwrap();
        assert_eq!(seq, res);
    }
}
