//! Empirical risk `R_n(θ) = (1/n) Σ rho(y_i - <θ, x_i>)` and its derivatives.
//!
//! All reductions over rows use compensated summation, so results agree with
//! any other summation order to within a few ulps.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::{generate, Dataset, DesignSpec, GrossErrorSpec};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::scalar::{norm1, CompensatedSum, Scalar};

/// Regression parameter.
pub type Theta<F> = Array1<F>;

/// Largest `p` for which [`empirical_hessian`] materializes a dense matrix.
pub const DENSE_HESSIAN_LIMIT: usize = 2000;

fn check_dims<F: Scalar>(ds: &Dataset<F>, len: usize) -> Result<()> {
    if ds.p() != len {
        return Err(Error::DimensionMismatch {
            expected: ds.p(),
            got: len,
        });
    }
    Ok(())
}

#[inline]
fn dot<F: Scalar>(a: ArrayView1<'_, F>, b: &[F]) -> F {
    let mut acc = F::zero();
    for (x, t) in a.iter().zip(b) {
        acc += *x * *t;
    }
    acc
}

/// Residuals `y - X θ`.
pub fn residuals<F: Scalar>(ds: &Dataset<F>, theta: &Theta<F>) -> Result<Array1<F>> {
    check_dims(ds, theta.len())?;
    let t = theta.as_slice().expect("owned vectors are contiguous");
    Ok(Array1::from_iter(
        (0..ds.n()).map(|i| ds.y()[i] - dot(ds.row(i), t)),
    ))
}

pub fn empirical_risk<F: Scalar>(ds: &Dataset<F>, spec: &LossSpec<F>, theta: &Theta<F>) -> Result<F> {
    let r = residuals(ds, theta)?;
    Ok(mean_loss(spec, &r))
}

fn mean_loss<F: Scalar>(spec: &LossSpec<F>, r: &Array1<F>) -> F {
    let mut acc = CompensatedSum::new();
    for &ri in r {
        acc.add(spec.rho(ri));
    }
    acc.value() / F::of(r.len() as f64)
}

/// `Σ_i w_i x_i / n` with per-coordinate compensation.
fn weighted_row_mean<F: Scalar>(ds: &Dataset<F>, w: impl Iterator<Item = F>) -> Array1<F> {
    let p = ds.p();
    let mut sum = vec![F::zero(); p];
    let mut comp = vec![F::zero(); p];
    for (i, wi) in w.enumerate() {
        if wi == F::zero() {
            continue;
        }
        let row = ds.row(i);
        let row = row.as_slice().expect("dataset rows are contiguous");
        for j in 0..p {
            let v = wi * row[j];
            let t = sum[j] + v;
            let bp = t - sum[j];
            comp[j] += (sum[j] - (t - bp)) + (v - bp);
            sum[j] = t;
        }
    }
    let n = F::of(ds.n() as f64);
    Array1::from_iter(sum.into_iter().zip(comp).map(|(s, c)| (s + c) / n))
}

/// `-(1/n) Σ psi(r_i) x_i`.
pub fn empirical_gradient<F: Scalar>(ds: &Dataset<F>, spec: &LossSpec<F>, theta: &Theta<F>) -> Result<Array1<F>> {
    let r = residuals(ds, theta)?;
    Ok(gradient_from_residuals(ds, spec, &r))
}

fn gradient_from_residuals<F: Scalar>(ds: &Dataset<F>, spec: &LossSpec<F>, r: &Array1<F>) -> Array1<F> {
    let mut g = weighted_row_mean(ds, r.iter().map(|&ri| spec.psi(ri)));
    g.mapv_inplace(|v| -v);
    g
}

/// Risk value and gradient from one residual pass.
pub fn risk_and_gradient<F: Scalar>(
    ds: &Dataset<F>,
    spec: &LossSpec<F>,
    theta: &Theta<F>,
) -> Result<(F, Array1<F>)> {
    let r = residuals(ds, theta)?;
    Ok((mean_loss(spec, &r), gradient_from_residuals(ds, spec, &r)))
}

/// Dense `(1/n) Σ psi'(r_i) x_i x_iᵀ`; exactly symmetric.
pub fn empirical_hessian<F: Scalar>(ds: &Dataset<F>, spec: &LossSpec<F>, theta: &Theta<F>) -> Result<Array2<F>> {
    let p = ds.p();
    if p > DENSE_HESSIAN_LIMIT {
        return Err(Error::HessianTooLarge {
            p,
            limit: DENSE_HESSIAN_LIMIT,
        });
    }
    let r = residuals(ds, theta)?;
    let mut acc: Vec<CompensatedSum<F>> = vec![CompensatedSum::new(); p * (p + 1) / 2];
    for (i, &ri) in r.iter().enumerate() {
        let w = spec.psi_prime(ri);
        if w == F::zero() {
            continue;
        }
        let row = ds.row(i);
        let mut k = 0;
        for a in 0..p {
            let wa = w * row[a];
            for b in a..p {
                acc[k].add(wa * row[b]);
                k += 1;
            }
        }
    }
    let n = F::of(ds.n() as f64);
    let mut h = Array2::zeros((p, p));
    let mut k = 0;
    for a in 0..p {
        for b in a..p {
            let v = acc[k].value() / n;
            h[[a, b]] = v;
            h[[b, a]] = v;
            k += 1;
        }
    }
    Ok(h)
}

/// Streaming `∇²R_n(θ) v` without forming the p×p matrix.
pub fn hessian_vector_product<F: Scalar>(
    ds: &Dataset<F>,
    spec: &LossSpec<F>,
    theta: &Theta<F>,
    v: &Array1<F>,
) -> Result<Array1<F>> {
    check_dims(ds, v.len())?;
    let r = residuals(ds, theta)?;
    let vs = v.as_slice().expect("contiguous");
    let w: Vec<F> = r
        .iter()
        .enumerate()
        .map(|(i, &ri)| spec.psi_prime(ri) * dot(ds.row(i), vs))
        .collect();
    Ok(weighted_row_mean(ds, w.into_iter()))
}

/// Directional curvature `vᵀ ∇²R_n(θ) v = (1/n) Σ psi'(r_i) <x_i, v>²`.
pub fn hessian_quadratic_form<F: Scalar>(
    ds: &Dataset<F>,
    spec: &LossSpec<F>,
    theta: &Theta<F>,
    v: &Array1<F>,
) -> Result<F> {
    check_dims(ds, v.len())?;
    let r = residuals(ds, theta)?;
    let vs = v.as_slice().expect("contiguous");
    let mut acc = CompensatedSum::new();
    for (i, &ri) in r.iter().enumerate() {
        let d = dot(ds.row(i), vs);
        acc.add(spec.psi_prime(ri) * d * d);
    }
    Ok(acc.value() / F::of(ds.n() as f64))
}

/// `R_n(θ) + λ ||θ||₁`.
pub fn penalized_objective<F: Scalar>(
    ds: &Dataset<F>,
    spec: &LossSpec<F>,
    theta: &Theta<F>,
    lambda_n: F,
) -> Result<F> {
    if !(lambda_n >= F::zero()) {
        return Err(Error::InvalidConfig(format!("lambda_n must be nonnegative, got {lambda_n}")));
    }
    let risk = empirical_risk(ds, spec, theta)?;
    if lambda_n == F::zero() {
        return Ok(risk);
    }
    Ok(risk + lambda_n * norm1(theta.as_slice().expect("contiguous")))
}

/// Risk value with optional derivatives, as reported to the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEval<F> {
    pub value: F,
    pub gradient: Option<Array1<F>>,
    pub hessian: Option<Array2<F>>,
}

impl<F: Scalar> RiskEval<F> {
    pub fn evaluate(
        ds: &Dataset<F>,
        spec: &LossSpec<F>,
        theta: &Theta<F>,
        with_gradient: bool,
        with_hessian: bool,
    ) -> Result<Self> {
        let (value, gradient) = if with_gradient {
            let (v, g) = risk_and_gradient(ds, spec, theta)?;
            (v, Some(g))
        } else {
            (empirical_risk(ds, spec, theta)?, None)
        };
        let hessian = if with_hessian {
            Some(empirical_hessian(ds, spec, theta)?)
        } else {
            None
        };
        Ok(Self { value, gradient, hessian })
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of the population risk `E rho(Y - <θ, X>)`.
///
/// Draws `n_mc` rows from the generator with `seed`, so the mean equals
/// [`empirical_risk`] on `generate(design with n = n_mc, noise, seed)`.
pub fn population_risk_mc(
    design: &DesignSpec,
    noise: &GrossErrorSpec,
    spec: &LossSpec<f64>,
    theta: &Theta<f64>,
    n_mc: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_mc < 100 {
        return Err(Error::InvalidConfig(format!("n_mc must be at least 100, got {n_mc}")));
    }
    let design = DesignSpec { n: n_mc, ..design.clone() };
    let ds: Dataset<f64> = generate(&design, noise, seed)?;
    let r = residuals(&ds, theta)?;
    let mean = mean_loss(spec, &r);
    let mut acc = CompensatedSum::new();
    for &ri in &r {
        let d = spec.rho(ri) - mean;
        acc.add(d * d);
    }
    let var = acc.value() / (n_mc - 1) as f64;
    Ok(McEstimate {
        mean,
        std_error: (var / n_mc as f64).sqrt(),
        samples: n_mc,
    })
}

/// `λ_max((1/n) XᵀX)` by power iteration (relative tolerance 1e-10).
pub fn gram_spectral_norm<F: Scalar>(ds: &Dataset<F>) -> F {
    let p = ds.p();
    let n = F::of(ds.n() as f64);
    let mut v = Array1::from_elem(p, F::one() / F::of(p as f64).sqrt());
    // break symmetry so an all-equal start cannot be orthogonal to the top vector
    for (j, e) in v.iter_mut().enumerate() {
        *e += F::of(1e-3 * ((j as f64 + 1.0) * 0.618_033_988_7).fract());
    }
    let mut lambda = F::zero();
    for _ in 0..10_000 {
        let nv = crate::scalar::norm2(v.as_slice().expect("contiguous"));
        v.mapv_inplace(|e| e / nv);
        let xv = ds.x().dot(&v);
        let w = ds.x().t().dot(&xv) / n;
        let next = v.dot(&w);
        v = w;
        if (next - lambda).abs() <= F::of(1e-10) * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}
