use ndarray::Axis;
#[cfg(test)]
use ndarray::Array1;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{draw_noise, Dataset, GrossErrorSpec};
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};
use crate::scalar::compensated_sum;

/// Per-column affine map fitted by [`standardize`]; reusable on held-out data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Sample standard deviation (divisor n - 1).
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(ds: &Dataset<f64>) -> Result<Self> {
        let n = ds.n();
        if n < 2 {
            return Err(Error::InvalidConfig("standardization needs at least two rows".into()));
        }
        let mut mean = Vec::with_capacity(ds.p());
        let mut std = Vec::with_capacity(ds.p());
        for (j, col) in ds.x().axis_iter(Axis(1)).enumerate() {
            let m = compensated_sum(col.iter().copied()) / n as f64;
            let var = compensated_sum(col.iter().map(|&v| (v - m) * (v - m))) / (n - 1) as f64;
            let s = var.sqrt();
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::ConstantColumn { column: j + 1 });
            }
            mean.push(m);
            std.push(s);
        }
        Ok(Self { mean, std })
    }

    /// Apply to the features of `ds`; responses and mask are untouched.
    pub fn apply(&self, ds: &Dataset<f64>) -> Result<Dataset<f64>> {
        if ds.p() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: ds.p(),
            });
        }
        let mut x = ds.x().clone();
        for (j, mut col) in x.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        let mut out = Dataset::new(x, ds.y().clone())?;
        if let Some(mask) = ds.outlier_mask() {
            out = out.with_outlier_mask(mask.to_vec())?;
        }
        Ok(out)
    }
}

/// Scale every feature column to sample mean 0 and sample std 1.
pub fn standardize(ds: &Dataset<f64>) -> Result<(Dataset<f64>, Standardizer)> {
    let t = Standardizer::fit(ds)?;
    Ok((t.apply(ds)?, t))
}

/// Add gross-error noise to the responses; `mu_i` uses the row's features.
pub fn corrupt_responses(ds: &Dataset<f64>, noise: &GrossErrorSpec, seed: u64) -> Result<Dataset<f64>> {
    noise.validate()?;
    let mut y = ds.y().clone();
    let mut mask = Vec::with_capacity(ds.n());
    for i in 0..ds.n() {
        let mut rng = stream(seed, Domain::Corrupt, i as u64);
        let (eps, out) = draw_noise(&mut rng, ds.row(i), noise);
        y[i] += eps;
        mask.push(out);
    }
    Dataset::new(ds.x().clone(), y)?.with_outlier_mask(mask)
}

/// Uniform random partition into `n_train` and `n - n_train` rows.
pub fn split(ds: &Dataset<f64>, n_train: usize, seed: u64) -> Result<(Dataset<f64>, Dataset<f64>)> {
    if n_train == 0 || n_train >= ds.n() {
        return Err(Error::InvalidConfig(format!(
            "n_train = {n_train} must lie strictly between 0 and n = {}",
            ds.n()
        )));
    }
    let mut idx: Vec<usize> = (0..ds.n()).collect();
    idx.shuffle(&mut stream(seed, Domain::Split, 0));
    let (train, test) = idx.split_at(n_train);
    Ok((ds.subset(train), ds.subset(test)))
}

#[cfg(test)]
fn column_moments(ds: &Dataset<f64>) -> (Array1<f64>, Array1<f64>) {
    let t = Standardizer::fit(ds).unwrap_or(Standardizer {
        mean: vec![f64::NAN; ds.p()],
        std: vec![f64::NAN; ds.p()],
    });
    (Array1::from(t.mean), Array1::from(t.std))
}
