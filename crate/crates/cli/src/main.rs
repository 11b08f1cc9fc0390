use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mest_core::data::{
    generate, load_table, sparse_theta0, write_csv, DesignDistribution, DesignSpec, GrossErrorSpec, OutlierMean,
    TableSchema,
};
use mest_core::harness::{self, ExperimentConfig, ExperimentKind, GridFamily};
use mest_core::rng::{stream, Domain};
use mest_core::solvers::{probe_tractability, sample_start, solve, SolverConfig};
use mest_core::theory::{theory_report, ModelConstants, SparsityParams};
use mest_core::{Dataset, Loss, LossFamily, Theta};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] mest_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_data_error() => 3,
            CliError::Core(
                mest_core::Error::InvalidConfig(_) | mest_core::Error::InvalidSpec(_) | mest_core::Error::Json(_),
            ) => 2,
            CliError::Core(_) => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "mest", version, about = "Robust M-estimation under gross-error contamination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a dataset from the gross-error model and write it as CSV.
    Generate(GenerateArgs),
    /// Run one projected or proximal gradient solve.
    Solve(SolveArgs),
    /// Multi-start tractability probe.
    Probe(ProbeArgs),
    /// Simulation sweeps (tractability, robustness, high-dimensional).
    Sweep(ExperimentArgs),
    /// Closed-form robustness and tractability radii.
    Theory(TheoryArgs),
    /// Train/test prediction study on an Airfoil-format table.
    Casestudy(ExperimentArgs),
    /// Uniform-convergence trend of the sample gradient.
    Uconv(ExperimentArgs),
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignKind {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct GenerateConfig {
    design: DesignSpec,
    noise: GrossErrorSpec,
    seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            design: DesignSpec {
                n: 200,
                p: 10,
                distribution: DesignDistribution::GaussianIsotropic { tau: 1.0 },
                theta0: vec![1.0 / 10f64.sqrt(); 10],
            },
            noise: GrossErrorSpec::default(),
            seed: 0,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_enum)]
    design: Option<DesignKind>,
    #[arg(long)]
    tau: Option<f64>,
    /// Number of nonzero coordinates of θ₀ (all equal to 1/sqrt(s0)).
    #[arg(long)]
    s0: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    outlier_sigma: Option<f64>,
    /// Constant outlier mean; the default is ||x||² + 1.
    #[arg(long)]
    outlier_mean: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_generate(a: GenerateArgs) -> CliResult<()> {
    let mut cfg: GenerateConfig = match &a.config {
        Some(p) => read_config(p)?,
        None => GenerateConfig::default(),
    };
    let d = &mut cfg.design;
    let p_changed = a.p.is_some_and(|p| p != d.p);
    if let Some(n) = a.n {
        d.n = n;
    }
    if let Some(p) = a.p {
        d.p = p;
    }
    let tau = a.tau.unwrap_or(d.distribution.tau());
    d.distribution = match a.design {
        Some(DesignKind::Gaussian) => DesignDistribution::GaussianIsotropic { tau },
        Some(DesignKind::Uniform) => DesignDistribution::UniformBox { tau },
        None => match d.distribution {
            DesignDistribution::GaussianIsotropic { .. } => DesignDistribution::GaussianIsotropic { tau },
            DesignDistribution::UniformBox { .. } => DesignDistribution::UniformBox { tau },
        },
    };
    if let Some(s0) = a.s0 {
        d.theta0 = sparse_theta0(d.p, s0, 1.0 / (s0 as f64).sqrt())?;
    } else if p_changed {
        d.theta0 = vec![1.0 / (d.p as f64).sqrt(); d.p];
    }
    let noise = &mut cfg.noise;
    if let Some(v) = a.delta {
        noise.delta = v;
    }
    if let Some(v) = a.sigma {
        noise.sigma = v;
    }
    if let Some(v) = a.outlier_sigma {
        noise.outlier_sigma = v;
    }
    if let Some(c) = a.outlier_mean {
        noise.outlier_mean = OutlierMean::Constant(c);
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let ds: Dataset = generate(&cfg.design, &cfg.noise, cfg.seed)?;
    write_csv(&ds, &a.out)?;
    println!(
        "{}",
        serde_json::json!({
            "path": a.out,
            "n": ds.n(),
            "p": ds.p(),
            "outlier_fraction": ds.outlier_fraction(),
        })
    );
    Ok(())
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
enum Schema {
    #[default]
    Csv,
    Whitespace,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(default)]
struct SolveConfig {
    data: Option<PathBuf>,
    schema: Schema,
    loss: Loss,
    solver: SolverConfig,
    starts: usize,
    cluster_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            data: None,
            schema: Schema::Csv,
            loss: Loss::welsch(0.1).expect("valid"),
            solver: SolverConfig::default(),
            starts: 20,
            cluster_tol: 1e-3,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: SolveCommon,
    /// Start from a random point in the ball instead of the origin.
    #[arg(long)]
    random_start: bool,
    /// Write the per-iteration trace (iter, gap, objective) to this CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    common: SolveCommon,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    cluster_tol: Option<f64>,
    /// Write per-start gap curves to this CSV.
    #[arg(long)]
    gaps: Option<PathBuf>,
}

#[derive(Args)]
struct SolveCommon {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset (CSV with header y,x1,...,xp unless --schema whitespace).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum)]
    schema: Option<Schema>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    backtracking: bool,
}

impl SolveCommon {
    fn resolve(&self) -> CliResult<(SolveConfig, Dataset)> {
        let mut cfg: SolveConfig = match &self.config {
            Some(p) => read_config(p)?,
            None => SolveConfig::default(),
        };
        if self.family.is_some() || self.alpha.is_some() {
            let family: LossFamily = match &self.family {
                Some(f) => f.parse()?,
                None => cfg.loss.family(),
            };
            cfg.loss = Loss::new(family, self.alpha.unwrap_or(cfg.loss.alpha()))?;
        }
        let s = &mut cfg.solver;
        if let Some(v) = self.radius {
            s.radius = v;
        }
        if let Some(v) = self.step {
            s.step_size = v;
        }
        if let Some(v) = self.lambda {
            s.lambda_n = v;
        }
        if let Some(v) = self.max_iters {
            s.max_iters = v;
        }
        if let Some(v) = self.tol {
            s.tol = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        s.backtracking |= self.backtracking;
        s.validate()?;
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        if let Some(sc) = self.schema {
            cfg.schema = sc;
        }
        let path = cfg
            .data
            .clone()
            .ok_or_else(|| CliError::Config("no dataset given (use --data or \"data\" in the config)".into()))?;
        let schema = match cfg.schema {
            Schema::Csv => TableSchema::CsvHeader,
            Schema::Whitespace => TableSchema::WhitespaceLastColResponse,
        };
        let ds = load_table(&path, schema)?;
        Ok((cfg, ds))
    }
}

fn cmd_solve(a: SolveArgs) -> CliResult<()> {
    let (cfg, ds) = a.common.resolve()?;
    let start: Theta = if a.random_start {
        sample_start(ds.p(), cfg.solver.radius, &mut stream(cfg.solver.seed, Domain::Start, 0))
    } else {
        Theta::zeros(ds.p())
    };
    let trace = solve(&ds, &cfg.loss, &cfg.solver, &start)?;
    if let Some(path) = &a.trace {
        let mut text = String::from("iter,gap,objective\n");
        for ((it, g), o) in trace.recorded_iterations.iter().zip(&trace.iterates_norm_gap).zip(&trace.objective) {
            text.push_str(&format!("{it},{g},{o}\n"));
        }
        std::fs::write(path, text).map_err(|e| mest_core::Error::Io { path: path.clone(), source: e })?;
    }
    println!(
        "{}",
        serde_json::json!({
            "loss": cfg.loss,
            "iterations": trace.iterations,
            "converged": trace.converged,
            "diverged": trace.diverged,
            "final_objective": trace.final_objective,
            "theta": trace.theta_final.to_vec(),
        })
    );
    Ok(())
}

fn cmd_probe(a: ProbeArgs) -> CliResult<()> {
    let (mut cfg, ds) = a.common.resolve()?;
    if let Some(s) = a.starts {
        cfg.starts = s;
    }
    if let Some(t) = a.cluster_tol {
        cfg.cluster_tol = t;
    }
    let report = probe_tractability(&ds, &cfg.loss, &cfg.solver, cfg.starts, cfg.cluster_tol)?;
    let best = report.best_final().to_vec();
    let cell = harness::ProbeCell {
        delta: f64::NAN,
        alpha: cfg.loss.alpha(),
        lambda_n: cfg.solver.lambda_n,
        report,
    };
    if let Some(path) = &a.gaps {
        let bytes = harness::gaps_csv(&[&cell])?;
        std::fs::write(path, bytes).map_err(|e| mest_core::Error::Io { path: path.clone(), source: e })?;
    }
    let r = &cell.report;
    println!(
        "{}",
        serde_json::json!({
            "loss": cfg.loss,
            "starts": r.starts,
            "unique": r.unique,
            "max_pairwise_gap": r.max_pairwise_gap,
            "clusters": r.clusters.iter().map(|c| c.size()).collect::<Vec<_>>(),
            "mean_iterations": r.mean_iterations(),
            "any_diverged": r.any_diverged(),
            "best_theta": best,
        })
    );
    Ok(())
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment kind for `sweep`: tractability, robustness or high-dim.
    #[arg(long)]
    kind: Option<String>,
    /// Airfoil-format table (case study).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    delta_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    /// Loss family parameterized by the α grid (α = 0 is least squares).
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Full-scale replica and start counts (100 replicas, 20 starts).
    #[arg(long)]
    full: bool,
    /// Run every task on the calling thread.
    #[arg(long)]
    sequential: bool,
}

impl ExperimentArgs {
    fn resolve(&self, forced: Option<ExperimentKind>) -> CliResult<ExperimentConfig> {
        let kind = match (&self.kind, forced) {
            (Some(_), Some(_)) => return Err(CliError::Config("--kind is only accepted by `sweep`".into())),
            (Some(k), None) => Some(k.parse::<ExperimentKind>()?),
            (None, f) => f,
        };
        let mut cfg = match &self.config {
            Some(p) => {
                let mut v: serde_json::Value = read_config(p)?;
                if !v.is_object() {
                    return Err(CliError::Config(format!("config {} must be a JSON object", p.display())));
                }
                if let Some(k) = kind {
                    v["kind"] = serde_json::to_value(k).map_err(mest_core::Error::from)?;
                }
                ExperimentConfig::from_json_str(&v.to_string())?
            }
            None => ExperimentConfig::preset(kind.unwrap_or(ExperimentKind::LowDimTractability)),
        };
        if forced.is_none() && matches!(cfg.kind, ExperimentKind::CaseStudy | ExperimentKind::UniformConvergence) {
            return Err(CliError::Config(format!(
                "`sweep` runs the simulation figures; use the dedicated subcommand for {:?}",
                cfg.kind
            )));
        }
        if self.full {
            cfg = cfg.full_scale();
        }
        if let Some(d) = &self.data {
            cfg.dataset_path = Some(d.clone());
        }
        if let Some(g) = &self.delta_grid {
            cfg.delta_grid = g.clone();
        }
        if let Some(g) = &self.alpha_grid {
            cfg.alpha_grid = g.clone();
        }
        if let Some(f) = &self.family {
            cfg.family = match f.to_ascii_lowercase().as_str() {
                "welsch" => GridFamily::Welsch,
                "huber" => GridFamily::Huber,
                other => return Err(CliError::Config(format!("unknown grid family {other:?}"))),
            };
        }
        if let Some(v) = self.replicas {
            cfg.replicas = v;
        }
        if let Some(v) = self.starts {
            cfg.starts = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.step {
            cfg.solver.step_size = v;
        }
        if let Some(v) = self.lambda {
            cfg.solver.lambda_n = v;
        }
        if let Some(v) = self.max_iters {
            cfg.solver.max_iters = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.output_dir = v.clone();
        }
        if self.sequential {
            cfg.execution = mest_core::solvers::Execution::Sequential;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn cmd_experiment(a: ExperimentArgs, forced: Option<ExperimentKind>) -> CliResult<()> {
    let cfg = a.resolve(forced)?;
    let outcome = harness::run_experiment(&cfg)?;
    println!(
        "{}",
        serde_json::json!({
            "kind": cfg.kind,
            "output_dir": cfg.output_dir,
            "outputs": outcome.manifest.outputs,
            "manifest": cfg.output_dir.join(harness::MANIFEST),
            "wall_time_seconds": outcome.manifest.wall_time_seconds,
        })
    );
    Ok(())
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(default)]
struct TheoryConfig {
    loss: Loss,
    constants: ModelConstants,
    s0: usize,
    n: usize,
    p: usize,
    lambda_n: Option<f64>,
    m_bound: Option<f64>,
    c_pi: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            loss: Loss::welsch(0.1).expect("valid"),
            constants: ModelConstants::default(),
            s0: 10,
            n: 200,
            p: 400,
            lambda_n: None,
            m_bound: None,
            c_pi: 1.0,
        }
    }
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    s0: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Penalty level for r_s; defaults to the recommended level.
    #[arg(long)]
    lambda: Option<f64>,
    /// Score scale M; defaults to τ.
    #[arg(long)]
    m_bound: Option<f64>,
    #[arg(long)]
    c_pi: Option<f64>,
}

fn cmd_theory(a: TheoryArgs) -> CliResult<()> {
    let mut cfg: TheoryConfig = match &a.config {
        Some(p) => read_config(p)?,
        None => TheoryConfig::default(),
    };
    if a.family.is_some() || a.alpha.is_some() {
        let family: LossFamily = match &a.family {
            Some(f) => f.parse()?,
            None => cfg.loss.family(),
        };
        cfg.loss = Loss::new(family, a.alpha.unwrap_or(cfg.loss.alpha()))?;
    }
    let c = &mut cfg.constants;
    for (slot, v) in [
        (&mut c.delta, a.delta),
        (&mut c.sigma, a.sigma),
        (&mut c.tau, a.tau),
        (&mut c.r, a.r),
        (&mut c.gamma, a.gamma),
        (&mut c.c2, a.c2),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    cfg.s0 = a.s0.unwrap_or(cfg.s0);
    cfg.n = a.n.unwrap_or(cfg.n);
    cfg.p = a.p.unwrap_or(cfg.p);
    cfg.lambda_n = a.lambda.or(cfg.lambda_n);
    cfg.m_bound = a.m_bound.or(cfg.m_bound);
    cfg.c_pi = a.c_pi.unwrap_or(cfg.c_pi);
    let sp = SparsityParams {
        s0: cfg.s0,
        n: cfg.n,
        p: cfg.p,
        m_bound: cfg.m_bound.unwrap_or(cfg.constants.tau),
        c_pi: cfg.c_pi,
    };
    let report = theory_report(&cfg.loss, &cfg.constants, &sp, cfg.lambda_n)?;
    println!("{}", serde_json::to_string(&report).map_err(mest_core::Error::from)?);
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Probe(a) => cmd_probe(a),
        Command::Sweep(a) => cmd_experiment(a, None),
        Command::Theory(a) => cmd_theory(a),
        Command::Casestudy(a) => cmd_experiment(a, Some(ExperimentKind::CaseStudy)),
        Command::Uconv(a) => cmd_experiment(a, Some(ExperimentKind::UniformConvergence)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
