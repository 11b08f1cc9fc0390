use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{sparse_theta0, DesignDistribution, DesignSpec, GrossErrorSpec};
use crate::error::{Error, Result};
use crate::losses::{LossFamily, LossSpec};
use crate::solvers::{Execution, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LowDimTractability,
    LowDimRobustness,
    HighDim,
    CaseStudy,
    UniformConvergence,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "low_dim_tractability" | "lowdim_tractability" | "tractability" | "fig1" => {
                Ok(ExperimentKind::LowDimTractability)
            }
            "low_dim_robustness" | "lowdim_robustness" | "robustness" | "fig2" => Ok(ExperimentKind::LowDimRobustness),
            "high_dim" | "highdim" | "fig3" => Ok(ExperimentKind::HighDim),
            "case_study" | "casestudy" => Ok(ExperimentKind::CaseStudy),
            "uniform_convergence" | "uconv" => Ok(ExperimentKind::UniformConvergence),
            other => Err(Error::InvalidConfig(format!("unknown experiment kind {other:?}"))),
        }
    }
}

/// Which loss family the α grid parameterizes. α = 0 always means the squared loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridFamily {
    Welsch,
    Huber,
}

/// One simulation or case-study run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub delta_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub family: GridFamily,
    pub replicas: usize,
    /// Random starts per solve.
    pub starts: usize,
    pub cluster_tol: f64,
    pub solver: SolverConfig,
    pub design: DesignSpec,
    pub noise: GrossErrorSpec,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub execution: Execution,
    /// Airfoil-format table for the case study.
    pub dataset_path: Option<PathBuf>,
    pub n_train: usize,
    /// Sample sizes for the uniform-convergence ladder.
    pub n_ladder: Vec<usize>,
    /// θ-grid points per axis for the uniform-convergence sup.
    pub grid_per_axis: usize,
    /// Radius of the θ-grid for the uniform-convergence sup.
    pub grid_radius: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(ExperimentKind::LowDimTractability)
    }
}

fn dense_theta0(p: usize) -> Vec<f64> {
    vec![1.0 / (p as f64).sqrt(); p]
}

impl ExperimentConfig {
    /// Desk-scale defaults for `kind`.
    pub fn preset(kind: ExperimentKind) -> Self {
        let gaussian = DesignDistribution::GaussianIsotropic { tau: 1.0 };
        let lowdim = DesignSpec {
            n: 200,
            p: 10,
            distribution: gaussian,
            theta0: dense_theta0(10),
        };
        let base = Self {
            kind,
            delta_grid: vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.4],
            alpha_grid: vec![0.1],
            family: GridFamily::Welsch,
            replicas: 1,
            starts: 20,
            cluster_tol: 1e-3,
            solver: SolverConfig::default(),
            design: lowdim,
            noise: GrossErrorSpec::default(),
            seed: 2024,
            output_dir: PathBuf::from("out"),
            execution: Execution::Parallel,
            dataset_path: None,
            n_train: 1000,
            n_ladder: vec![500, 1000, 2000, 4000, 8000, 16000],
            grid_per_axis: 9,
            grid_radius: 3.0,
        };
        match kind {
            ExperimentKind::LowDimTractability => base,
            ExperimentKind::LowDimRobustness => Self {
                delta_grid: vec![0.0, 0.1, 0.2, 0.3, 0.4],
                alpha_grid: vec![0.0, 0.05, 0.1, 0.3],
                replicas: 25,
                starts: 10,
                ..base
            },
            ExperimentKind::HighDim => Self {
                delta_grid: vec![0.0, 0.1, 0.2, 0.3],
                solver: SolverConfig {
                    lambda_n: 0.1,
                    step_size: 0.1,
                    ..SolverConfig::default()
                },
                design: DesignSpec {
                    n: 200,
                    p: 400,
                    distribution: gaussian,
                    theta0: sparse_theta0(400, 10, 1.0 / 10f64.sqrt()).expect("valid sparsity"),
                },
                ..base
            },
            ExperimentKind::CaseStudy => Self {
                delta_grid: vec![0.0, 0.1, 0.2, 0.3, 0.4],
                alpha_grid: vec![0.0, 0.4, 0.7],
                replicas: 25,
                starts: 10,
                solver: SolverConfig {
                    step_size: 0.5,
                    ..SolverConfig::default()
                },
                ..base
            },
            ExperimentKind::UniformConvergence => Self {
                delta_grid: vec![0.1],
                replicas: 20,
                design: DesignSpec {
                    n: 16000,
                    p: 2,
                    distribution: gaussian,
                    theta0: dense_theta0(2),
                },
                ..base
            },
        }
    }

    /// Full-scale counts: 100 replicas and 20 starts for the sweeps, 20 starts elsewhere.
    pub fn full_scale(mut self) -> Self {
        match self.kind {
            ExperimentKind::LowDimRobustness | ExperimentKind::CaseStudy => {
                self.replicas = 100;
                self.starts = 20;
            }
            _ => self.starts = 20,
        }
        self
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Parse a config; absent fields take the defaults of the given `kind`
    /// (or of the tractability preset when `kind` is absent).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let kind = match value.get("kind") {
            Some(k) => serde_json::from_value(k.clone())?,
            None => ExperimentKind::LowDimTractability,
        };
        let mut merged = serde_json::to_value(Self::preset(kind))?;
        merge(&mut merged, value.take());
        let cfg: Self = serde_json::from_value(merged)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.delta_grid.is_empty() || self.alpha_grid.is_empty() {
            return bad("delta_grid and alpha_grid must be nonempty".into());
        }
        if self.delta_grid.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return bad(format!("delta_grid entries must lie in [0, 1]: {:?}", self.delta_grid));
        }
        for &a in &self.alpha_grid {
            self.loss(a)?;
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if self.starts < 2 {
            return bad(format!("need at least 2 starts, got {}", self.starts));
        }
        if !(self.cluster_tol > 0.0) {
            return bad(format!("cluster_tol must be positive, got {}", self.cluster_tol));
        }
        self.solver.validate()?;
        self.noise.validate()?;
        match self.kind {
            ExperimentKind::CaseStudy => {
                if self.dataset_path.is_none() {
                    return bad("the case study needs dataset_path".into());
                }
                if self.n_train == 0 {
                    return bad("n_train must be positive".into());
                }
            }
            ExperimentKind::UniformConvergence => {
                self.design.validate()?;
                if self.design.p > 5 {
                    return bad(format!("uniform convergence grid needs p <= 5, got {}", self.design.p));
                }
                if self.n_ladder.len() < 2 || self.n_ladder.contains(&0) {
                    return bad("n_ladder needs at least two positive sizes".into());
                }
                if self.grid_per_axis < 2 || !(self.grid_radius > 0.0) {
                    return bad("grid_per_axis >= 2 and grid_radius > 0 required".into());
                }
            }
            _ => self.design.validate()?,
        }
        Ok(())
    }

    /// The loss for grid value `alpha` (0 is the squared loss).
    pub fn loss(&self, alpha: f64) -> Result<LossSpec<f64>> {
        if alpha == 0.0 {
            return Ok(LossSpec::squared());
        }
        let family = match self.family {
            GridFamily::Welsch => LossFamily::Welsch,
            GridFamily::Huber => LossFamily::Huber,
        };
        LossSpec::new(family, alpha)
    }
}

fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    use serde_json::Value;
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    // Enum-valued objects (design distribution) are replaced wholesale.
                    Some(slot) if slot.is_object() && v.is_object() && k != "distribution" => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for kind in [
            ExperimentKind::LowDimTractability,
            ExperimentKind::LowDimRobustness,
            ExperimentKind::HighDim,
            ExperimentKind::UniformConvergence,
        ] {
            ExperimentConfig::preset(kind).validate().unwrap();
        }
        let cs = ExperimentConfig::preset(ExperimentKind::CaseStudy);
        assert!(cs.validate().is_err());
        ExperimentConfig { dataset_path: Some("x".into()), ..cs }.validate().unwrap();
    }

    #[test]
    fn full_scale_restores_counts() {
        let c = ExperimentConfig::preset(ExperimentKind::LowDimRobustness);
        assert_eq!((c.replicas, c.starts), (25, 10));
        let f = c.full_scale();
        assert_eq!((f.replicas, f.starts), (100, 20));
    }

    #[test]
    fn partial_json_merges_over_preset() {
        let c = ExperimentConfig::from_json_str(
            r#"{"kind": "high_dim", "replicas": 3, "solver": {"max_iters": 50},
                "design": {"distribution": {"uniform_box": {"tau": 2.0}}}}"#,
        )
        .unwrap();
        assert_eq!(c.kind, ExperimentKind::HighDim);
        assert_eq!(c.replicas, 3);
        assert_eq!(c.solver.max_iters, 50);
        assert_eq!(c.solver.lambda_n, 0.1);
        assert_eq!(c.design.p, 400);
        assert_eq!(c.design.distribution, DesignDistribution::UniformBox { tau: 2.0 });
    }

    #[test]
    fn bad_json_and_values_are_rejected() {
        assert!(ExperimentConfig::from_json_str("{").is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"kind": "nope"}"#).is_err());
        let mut c = ExperimentConfig::default();
        c.delta_grid.clear();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.family = GridFamily::Huber;
        c.alpha_grid = vec![0.0, 1.0];
        c.validate().unwrap();
        assert!(c.loss(0.0).unwrap().is_quadratic());
        c.starts = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn kind_parses_cli_spellings() {
        assert_eq!("fig2".parse::<ExperimentKind>().unwrap(), ExperimentKind::LowDimRobustness);
        assert_eq!("high-dim".parse::<ExperimentKind>().unwrap(), ExperimentKind::HighDim);
        assert_eq!("uconv".parse::<ExperimentKind>().unwrap(), ExperimentKind::UniformConvergence);
    }
}
