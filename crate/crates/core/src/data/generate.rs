use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{Dataset, DesignDistribution, DesignSpec, GrossErrorSpec, OutlierMean};
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};
use crate::scalar::Scalar;

/// Draw one noise term for a row with features `x`. Returns `(eps, is_outlier)`.
pub fn draw_noise<R: Rng + ?Sized>(rng: &mut R, x: ArrayView1<'_, f64>, noise: &GrossErrorSpec) -> (f64, bool) {
    let is_outlier = rng.random::<f64>() < noise.delta;
    let z: f64 = StandardNormal.sample(rng);
    if is_outlier {
        let mu = match noise.outlier_mean {
            OutlierMean::XNormPlusOne => x.dot(&x) + 1.0,
            OutlierMean::Constant(c) => c,
        };
        (mu + noise.outlier_sigma * z, true)
    } else {
        (noise.sigma * z, false)
    }
}

/// Sample `y_i = <theta0, x_i> + eps_i` under the gross-error model.
///
/// Row `i` draws from its own stream of `seed`, so the output does not depend
/// on how rows are scheduled across threads.
pub fn generate<F: Scalar>(design: &DesignSpec, noise: &GrossErrorSpec, seed: u64) -> Result<Dataset<F>> {
    design.validate()?;
    noise.validate()?;
    let p = design.p;
    let theta0 = Array1::from(design.theta0.clone());

    let rows: Vec<(Vec<f64>, f64, bool)> = (0..design.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, Domain::Generate, i as u64);
            let x: Vec<f64> = match design.distribution {
                DesignDistribution::GaussianIsotropic { tau } => (0..p)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        tau * z
                    })
                    .collect(),
                DesignDistribution::UniformBox { tau } => {
                    (0..p).map(|_| rng.random_range(-tau..tau)).collect()
                }
            };
            let xv = ArrayView1::from(&x[..]);
            let (eps, is_outlier) = draw_noise(&mut rng, xv, noise);
            let y = xv.dot(&theta0) + eps;
            (x, y, is_outlier)
        })
        .collect();

    let mut x = Array2::<F>::zeros((design.n, p));
    let mut y = Array1::<F>::zeros(design.n);
    let mut mask = Vec::with_capacity(design.n);
    for (i, (xi, yi, out)) in rows.into_iter().enumerate() {
        for (j, v) in xi.into_iter().enumerate() {
            x[[i, j]] = F::of(v);
        }
        y[i] = F::of(yi);
        mask.push(out);
    }
    Dataset::new(x, y)?.with_outlier_mask(mask)
}

/// `s0`-sparse parameter: the first `s0` coordinates equal `value`.
pub fn sparse_theta0(p: usize, s0: usize, value: f64) -> Result<Vec<f64>> {
    if s0 == 0 || s0 > p {
        return Err(Error::InvalidConfig(format!("sparsity s0 = {s0} must lie in 1..={p}")));
    }
    let mut theta = vec![0.0; p];
    theta[..s0].iter_mut().for_each(|v| *v = value);
    Ok(theta)
}
