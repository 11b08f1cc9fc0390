//! Robust linear regression by non-convex M-estimation under Huber's
//! gross-error contamination model.
//!
//! The numeric core (`losses`, `risk`, `solvers`) is generic over the scalar
//! type through [`Scalar`]; the crate root re-exports `f64` aliases for the
//! common case. `theory` and `harness` work in `f64` throughout.

pub mod data;
pub mod error;
pub mod harness;
pub mod losses;
pub mod risk;
pub mod rng;
pub mod scalar;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};
pub use losses::{LossBounds, LossFamily, LossSpec};
pub use scalar::Scalar;

/// `f64` dataset.
pub type Dataset = data::Dataset<f64>;
/// `f32` dataset.
pub type Dataset32 = data::Dataset<f32>;
/// Parameter vector in `f64`.
pub type Theta = risk::Theta<f64>;
/// Parameter vector in `f32`.
pub type Theta32 = risk::Theta<f32>;
/// `f64` loss specification.
pub type Loss = LossSpec<f64>;
/// `f32` loss specification.
pub type Loss32 = LossSpec<f32>;

/// `f64` solve trace.
pub type SolveTrace = solvers::SolveTrace<f64>;
/// `f64` tractability report.
pub type TractabilityReport = solvers::TractabilityReport<f64>;
