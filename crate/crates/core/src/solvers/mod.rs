//! First-order solvers for the ball-constrained (optionally ℓ₁-penalized)
//! M-estimation problem, and the multi-start tractability probe.

mod config;
mod descent;
mod probe;
mod prox;

pub use config::SolverConfig;
pub use descent::{solve, solve_pgd, solve_prox_gd, SolveTrace};
pub use probe::{
    probe_tractability, probe_tractability_with, sample_start, single_linkage_clusters, Cluster, Execution,
    TractabilityReport,
};
pub use prox::{project_ball, prox_l1_ball, soft_threshold};
