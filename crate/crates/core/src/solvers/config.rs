use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings shared by the projected and proximal gradient solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Radius `r` of the feasible ball `||θ||₂ <= r`.
    pub radius: f64,
    pub step_size: f64,
    /// ℓ₁ penalty weight; 0 gives the unpenalized problem.
    pub lambda_n: f64,
    pub max_iters: usize,
    /// Stop once `||θ_{k+1} - θ_k||₂ <= tol`.
    pub tol: f64,
    pub seed: u64,
    /// Record every `record_stride`-th iterate in the trace (the final one is
    /// always recorded).
    pub record_stride: usize,
    /// Halve the step until the sufficient-decrease condition holds.
    pub backtracking: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            radius: 10.0,
            step_size: 1.0,
            lambda_n: 0.0,
            max_iters: 10_000,
            tol: 1e-8,
            seed: 0,
            record_stride: 1,
            backtracking: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad(format!("step_size must be positive, got {}", self.step_size));
        }
        if !(self.lambda_n >= 0.0 && self.lambda_n.is_finite()) {
            return bad(format!("lambda_n must be nonnegative, got {}", self.lambda_n));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive".into());
        }
        Ok(())
    }
}
