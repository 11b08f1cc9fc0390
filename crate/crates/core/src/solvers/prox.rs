use ndarray::Array1;

use crate::error::{Error, Result};
use crate::scalar::{norm2, Scalar};

/// Euclidean projection onto `{||x||₂ <= radius}`: a radial rescale.
pub fn project_ball<F: Scalar>(v: &Array1<F>, radius: F) -> Array1<F> {
    let nrm = norm2(v.as_slice().expect("contiguous"));
    if nrm <= radius {
        v.clone()
    } else {
        let s = radius / nrm;
        v.mapv(|e| e * s)
    }
}

/// Componentwise `sign(v_i) max(|v_i| - t, 0)`, the prox of `t ||·||₁`.
pub fn soft_threshold<F: Scalar>(v: &Array1<F>, t: F) -> Result<Array1<F>> {
    if !(t >= F::zero()) {
        return Err(Error::InvalidConfig(format!("threshold must be nonnegative, got {t}")));
    }
    Ok(v.mapv(|e| shrink(e, t)))
}

#[inline]
fn shrink<F: Scalar>(e: F, t: F) -> F {
    let m = e.abs() - t;
    if m > F::zero() {
        m.copysign(e)
    } else {
        F::zero()
    }
}

/// Prox of `t ||·||₁ + indicator(||·||₂ <= radius)`.
///
/// Soft-thresholding followed by ball projection is exact here: the ball is
/// rotation invariant and the projection only rescales the thresholded point,
/// which keeps its sign pattern and support.
pub fn prox_l1_ball<F: Scalar>(v: &Array1<F>, t: F, radius: F) -> Result<Array1<F>> {
    if !(radius > F::zero()) {
        return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
    }
    Ok(project_ball(&soft_threshold(v, t)?, radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn project_examples() {
        let v = array![0.3, -0.4];
        assert_eq!(project_ball(&v, 1.0), v);
        let p = project_ball(&array![3.0f64, 4.0], 1.0);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert_eq!(project_ball(&p, 1.0), p);
    }

    #[test]
    fn soft_threshold_examples() {
        let v = array![3.0, -0.5, -2.0];
        assert_eq!(soft_threshold(&v, 0.0).unwrap(), v);
        assert_eq!(soft_threshold(&array![3.0, -0.5], 1.0).unwrap(), array![2.0, 0.0]);
        assert_eq!(soft_threshold(&v, 1.0).unwrap(), array![2.0, 0.0, -1.0]);
        assert!(soft_threshold(&v, -1.0).is_err());
    }

    // brute-force argmin of ½(x - v)² + t|x| over a 1e-4 grid
    fn grid_argmin(v: f64, t: f64) -> f64 {
        let lo = (v.min(0.0) - 1.0) * 1e4;
        let hi = (v.max(0.0) + 1.0) * 1e4;
        let mut best = (f64::INFINITY, 0.0);
        let mut k = lo.floor();
        while k <= hi.ceil() {
            let x = k * 1e-4;
            let f = 0.5 * (x - v) * (x - v) + t * x.abs();
            if f < best.0 {
                best = (f, x);
            }
            k += 1.0;
        }
        best.1
    }

    #[test]
    fn soft_threshold_matches_grid_oracle() {
        for &(v, t) in &[(1.7, 0.4), (-0.3, 0.5), (-2.25, 1.0), (0.05, 0.0), (0.8, 0.8)] {
            let got = soft_threshold(&array![v], t).unwrap()[0];
            assert!((got - grid_argmin(v, t)).abs() <= 1e-4, "v={v} t={t}");
        }
    }

    #[test]
    fn prox_examples() {
        let v = array![0.2, -0.3];
        assert_eq!(prox_l1_ball(&v, 0.0, 1.0).unwrap(), v);
        let p = prox_l1_ball(&array![10.0f64, 0.0], 1.0, 2.0).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-15 && p[1] == 0.0);
        assert!(prox_l1_ball(&v, 0.1, 0.0).is_err());
    }

    #[test]
    fn prox_matches_2d_grid_oracle() {
        let cases: [(Array1<f64>, f64, f64); 3] = [(array![1.5, -0.7], 0.3, 1.0), (array![0.4, 0.1], 0.2, 2.0), (array![-3.0, 2.5], 0.5, 1.5)];
        for (v, t, r) in cases {
            let got = prox_l1_ball(&v, t, r).unwrap();
            let h = 2e-3;
            let steps = (r / h).ceil() as i64;
            let mut best = (f64::INFINITY, [0.0, 0.0]);
            for i in -steps..=steps {
                for j in -steps..=steps {
                    let x = [i as f64 * h, j as f64 * h];
                    if x[0] * x[0] + x[1] * x[1] > r * r {
                        continue;
                    }
                    let f = 0.5 * ((x[0] - v[0]).powi(2) + (x[1] - v[1]).powi(2)) + t * (x[0].abs() + x[1].abs());
                    if f < best.0 {
                        best = (f, x);
                    }
                }
            }
            assert!((got[0] - best.1[0]).abs() <= 1e-3 + h && (got[1] - best.1[1]).abs() <= 1e-3 + h, "{got} vs {:?}", best.1);
        }
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_idempotent(v in prop::collection::vec(-50.0f64..50.0, 1..8), r in 0.01f64..20.0) {
            let v = Array1::from(v);
            let p = project_ball(&v, r);
            prop_assert!(norm2(p.as_slice().unwrap()) <= r * (1.0 + 1e-12));
            let pp = project_ball(&p, r);
            for (a, b) in p.iter().zip(pp.iter()) {
                prop_assert!((a - b).abs() <= 1e-12 * r);
            }
        }
    }
}
