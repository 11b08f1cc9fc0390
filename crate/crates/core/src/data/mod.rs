//! Datasets, the gross-error data generator, table ingestion and
//! preprocessing.

mod generate;
mod table;
mod transform;

pub use generate::{draw_noise, generate, sparse_theta0};
pub use table::{load_table, write_csv, TableSchema};
pub use transform::{corrupt_responses, split, standardize, Standardizer};

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Design matrix and responses, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    x: Array2<F>,
    y: Array1<F>,
    outlier_mask: Option<Vec<bool>>,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(x: Array2<F>, y: Array1<F>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        Ok(Self {
            x: x.as_standard_layout().into_owned(),
            y,
            outlier_mask: None,
        })
    }

    pub fn with_outlier_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.y.len() {
            return Err(Error::DimensionMismatch {
                expected: self.y.len(),
                got: mask.len(),
            });
        }
        self.outlier_mask = Some(mask);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<F> {
        &self.x
    }

    pub fn y(&self) -> &Array1<F> {
        &self.y
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, F> {
        self.x.row(i)
    }

    pub fn outlier_mask(&self) -> Option<&[bool]> {
        self.outlier_mask.as_deref()
    }

    pub fn outlier_fraction(&self) -> Option<f64> {
        self.outlier_mask
            .as_ref()
            .map(|m| m.iter().filter(|&&b| b).count() as f64 / m.len().max(1) as f64)
    }

    /// Rows `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), indices),
            y: self.y.select(Axis(0), indices),
            outlier_mask: self
                .outlier_mask
                .as_ref()
                .map(|m| indices.iter().map(|&i| m[i]).collect()),
        }
    }

    /// Row-wise concatenation `(self; other)`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.p() != other.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                got: other.p(),
            });
        }
        let x = ndarray::concatenate(Axis(0), &[self.x.view(), other.x.view()])
            .expect("column counts checked");
        let y = ndarray::concatenate(Axis(0), &[self.y.view(), other.y.view()])
            .expect("1-d concat");
        let outlier_mask = match (&self.outlier_mask, &other.outlier_mask) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Ok(Self { x, y, outlier_mask })
    }

    /// Same data with responses replaced.
    pub fn with_responses(&self, y: Array1<F>) -> Result<Self> {
        let mut out = Self::new(self.x.clone(), y)?;
        out.outlier_mask = self.outlier_mask.clone();
        Ok(out)
    }

    pub fn cast<G: Scalar>(&self) -> Dataset<G> {
        Dataset {
            x: self.x.mapv(|v| G::of(v.to_f64_lossy())),
            y: self.y.mapv(|v| G::of(v.to_f64_lossy())),
            outlier_mask: self.outlier_mask.clone(),
        }
    }
}

/// Distribution of the feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignDistribution {
    /// `x ~ N(0, τ² I)`.
    GaussianIsotropic { tau: f64 },
    /// `x ~ Uniform([-τ, τ]^p)`.
    UniformBox { tau: f64 },
}

impl DesignDistribution {
    pub fn tau(&self) -> f64 {
        match *self {
            DesignDistribution::GaussianIsotropic { tau } | DesignDistribution::UniformBox { tau } => tau,
        }
    }

    /// `E ||x||²` for a p-dimensional draw.
    pub fn expected_sq_norm(&self, p: usize) -> f64 {
        match *self {
            DesignDistribution::GaussianIsotropic { tau } => p as f64 * tau * tau,
            DesignDistribution::UniformBox { tau } => p as f64 * tau * tau / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub n: usize,
    pub p: usize,
    pub distribution: DesignDistribution,
    pub theta0: Vec<f64>,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidConfig(format!(
                "design needs n, p >= 1 (got n = {}, p = {})",
                self.n, self.p
            )));
        }
        let tau = self.distribution.tau();
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {tau}")));
        }
        if self.theta0.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: self.theta0.len(),
            });
        }
        if self.theta0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("theta0 must be finite".into()));
        }
        Ok(())
    }
}

/// Mean of the outlier noise distribution `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierMean {
    /// `mu_i = ||x_i||² + 1`.
    XNormPlusOne,
    Constant(f64),
}

/// Noise law `(1 - δ) N(0, σ²) + δ N(mu_i, outlier_sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrossErrorSpec {
    pub delta: f64,
    pub sigma: f64,
    #[serde(default = "default_outlier_mean")]
    pub outlier_mean: OutlierMean,
    #[serde(default = "default_outlier_sigma")]
    pub outlier_sigma: f64,
}

fn default_outlier_mean() -> OutlierMean {
    OutlierMean::XNormPlusOne
}

fn default_outlier_sigma() -> f64 {
    3.0
}

impl Default for GrossErrorSpec {
    fn default() -> Self {
        Self {
            delta: 0.0,
            sigma: 1.0,
            outlier_mean: OutlierMean::XNormPlusOne,
            outlier_sigma: 3.0,
        }
    }
}

impl GrossErrorSpec {
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidConfig(format!("delta must lie in [0, 1], got {}", self.delta)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.outlier_sigma > 0.0 && self.outlier_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "outlier_sigma must be positive, got {}",
                self.outlier_sigma
            )));
        }
        if let OutlierMean::Constant(c) = self.outlier_mean {
            if !c.is_finite() {
                return Err(Error::InvalidConfig("outlier mean must be finite".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn dataset_rejects_mismatched_rows() {
        let err = Dataset::new(Array2::<f64>::zeros((3, 2)), Array1::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, got: 2 }));
    }

    #[test]
    fn subset_and_concat() {
        let ds = Dataset::new(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], array![1.0, 2.0, 3.0])
            .unwrap()
            .with_outlier_mask(vec![false, true, false])
            .unwrap();
        let s = ds.subset(&[2, 0]);
        assert_eq!(s.y(), &array![3.0, 1.0]);
        assert_eq!(s.outlier_mask(), Some(&[false, false][..]));
        let c = ds.concat(&ds).unwrap();
        assert_eq!(c.n(), 6);
        assert_eq!(c.row(4), array![3.0, 4.0]);
    }

    #[test]
    fn spec_validation() {
        assert!(GrossErrorSpec::default().with_delta(1.2).validate().is_err());
        assert!(GrossErrorSpec { sigma: 0.0, ..Default::default() }.validate().is_err());
        let d = DesignSpec {
            n: 5,
            p: 2,
            distribution: DesignDistribution::UniformBox { tau: 1.0 },
            theta0: vec![0.0],
        };
        assert!(d.validate().is_err());
    }

    #[test]
    fn noise_spec_json() {
        let s: GrossErrorSpec =
            serde_json::from_str(r#"{"delta":0.1,"sigma":1.0,"outlier_mean":{"constant":5.0}}"#).unwrap();
        assert_eq!(s.outlier_mean, OutlierMean::Constant(5.0));
        assert_eq!(s.outlier_sigma, 3.0);
        let s: GrossErrorSpec =
            serde_json::from_str(r#"{"delta":0.1,"sigma":1.0,"outlier_mean":"x_norm_plus_one"}"#).unwrap();
        assert_eq!(s.outlier_mean, OutlierMean::XNormPlusOne);
    }
}
