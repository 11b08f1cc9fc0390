use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::prox::{project_ball, prox_l1_ball};
use super::SolverConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::risk::{risk_and_gradient, Theta};
use crate::scalar::{distance, norm1, norm2, Scalar};

/// Per-run record of a gradient solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace<F> {
    /// Iteration index of each recorded iterate (0 is the projected start).
    pub recorded_iterations: Vec<usize>,
    /// `||θ_k - θ_final||₂` for each recorded iterate.
    pub iterates_norm_gap: Vec<F>,
    /// Penalized objective at each recorded iterate.
    pub objective: Vec<F>,
    pub converged: bool,
    /// Set when the objective became non-finite or a gradient step left the
    /// ball of radius `10 r`.
    pub diverged: bool,
    pub iterations: usize,
    pub theta_final: Theta<F>,
    pub final_objective: F,
    /// Step size in effect at the end (differs from the configured one only
    /// with backtracking).
    pub final_step: F,
}

/// Projected gradient descent on `R_n` over the ball (requires `lambda_n == 0`).
pub fn solve_pgd<F: Scalar>(
    ds: &Dataset<F>,
    spec: &LossSpec<F>,
    cfg: &SolverConfig,
    theta_init: &Theta<F>,
) -> Result<SolveTrace<F>> {
    if cfg.lambda_n != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "projected gradient descent solves the unpenalized problem; lambda_n = {} given",
            cfg.lambda_n
        )));
    }
    finish(descend(ds, spec, cfg, theta_init)?)
}

/// Proximal gradient descent on `R_n + lambda_n ||·||₁` over the ball.
pub fn solve_prox_gd<F: Scalar>(
    ds: &Dataset<F>,
    spec: &LossSpec<F>,
    cfg: &SolverConfig,
    theta_init: &Theta<F>,
) -> Result<SolveTrace<F>> {
    finish(descend(ds, spec, cfg, theta_init)?)
}

/// Dispatch on `cfg.lambda_n`.
pub fn solve<F: Scalar>(
    ds: &Dataset<F>,
    spec: &LossSpec<F>,
    cfg: &SolverConfig,
    theta_init: &Theta<F>,
) -> Result<SolveTrace<F>> {
    if cfg.lambda_n == 0.0 {
        solve_pgd(ds, spec, cfg, theta_init)
    } else {
        solve_prox_gd(ds, spec, cfg, theta_init)
    }
}

fn finish<F: Scalar>(trace: SolveTrace<F>) -> Result<SolveTrace<F>> {
    if trace.diverged && !trace.final_objective.is_finite() {
        return Err(Error::Diverged {
            iteration: trace.iterations,
            reason: "objective is not finite; the step size is probably too large".into(),
        });
    }
    Ok(trace)
}

/// The shared iteration. Divergence is reported through the trace flag, never
/// as an error, so the multi-start probe can keep going.
pub(crate) fn descend<F: Scalar>(
    ds: &Dataset<F>,
    spec: &LossSpec<F>,
    cfg: &SolverConfig,
    theta_init: &Theta<F>,
) -> Result<SolveTrace<F>> {
    cfg.validate()?;
    if theta_init.len() != ds.p() {
        return Err(Error::DimensionMismatch {
            expected: ds.p(),
            got: theta_init.len(),
        });
    }
    let radius = F::of(cfg.radius);
    let blowup = F::of(10.0 * cfg.radius);
    let lambda = F::of(cfg.lambda_n);
    let tol = F::of(cfg.tol);
    let objective_of = |risk: F, theta: &Array1<F>| {
        if lambda == F::zero() {
            risk
        } else {
            risk + lambda * norm1(theta.as_slice().expect("contiguous"))
        }
    };

    let mut step = F::of(cfg.step_size);
    let mut theta = project_ball(theta_init, radius);
    let (mut risk, mut grad) = risk_and_gradient(ds, spec, &theta)?;
    let mut obj = objective_of(risk, &theta);

    let mut recorded = vec![theta.clone()];
    let mut recorded_iterations = vec![0];
    let mut objective = vec![obj];
    let mut converged = false;
    let mut diverged = !obj.is_finite();
    let mut iterations = 0;

    while !diverged && iterations < cfg.max_iters {
        let k = iterations + 1;
        let (next, next_risk, next_grad) = loop {
            let z = &theta - &grad.mapv(|g| g * step);
            if !(norm2(z.as_slice().expect("contiguous")) <= blowup) {
                diverged = true;
                break (theta.clone(), risk, grad.clone());
            }
            let next = prox_l1_ball(&z, step * lambda, radius)?;
            let (nr, ng) = risk_and_gradient(ds, spec, &next)?;
            if !cfg.backtracking || sufficient_decrease(&theta, risk, &grad, &next, nr, step) {
                break (next, nr, ng);
            }
            step = step * F::of(0.5);
            if step < F::epsilon() * F::of(cfg.step_size) {
                break (next, nr, ng);
            }
        };
        if diverged {
            break;
        }
        let next_obj = objective_of(next_risk, &next);
        let disp = distance(
            next.as_slice().expect("contiguous"),
            theta.as_slice().expect("contiguous"),
        );
        theta = next;
        risk = next_risk;
        grad = next_grad;
        obj = next_obj;
        iterations = k;
        if !obj.is_finite() {
            diverged = true;
        }
        let done = disp <= tol;
        if k % cfg.record_stride == 0 || done || diverged || k == cfg.max_iters {
            recorded.push(theta.clone());
            recorded_iterations.push(k);
            objective.push(obj);
        }
        if done {
            converged = !diverged;
            break;
        }
    }

    let final_slice = theta.as_slice().expect("contiguous");
    let iterates_norm_gap = recorded
        .iter()
        .map(|t| distance(t.as_slice().expect("contiguous"), final_slice))
        .collect();
    Ok(SolveTrace {
        recorded_iterations,
        iterates_norm_gap,
        objective,
        converged,
        diverged,
        iterations,
        theta_final: theta,
        final_objective: obj,
        final_step: step,
    })
}

/// `R(x+) <= R(x) + <g, x+ - x> + ||x+ - x||² / (2 step)`.
fn sufficient_decrease<F: Scalar>(x: &Array1<F>, rx: F, g: &Array1<F>, next: &Array1<F>, rn: F, step: F) -> bool {
    let d = next - x;
    let bound = rx + g.dot(&d) + d.dot(&d) / (F::of(2.0) * step);
    rn <= bound + F::epsilon() * rx.abs().max(F::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, DesignDistribution, DesignSpec, GrossErrorSpec};
    use crate::risk::{empirical_gradient, gram_spectral_norm};
    use ndarray::array;

    fn data(n: usize, p: usize, delta: f64, seed: u64) -> Dataset<f64> {
        let design = DesignSpec {
            n,
            p,
            distribution: DesignDistribution::GaussianIsotropic { tau: 1.0 },
            theta0: vec![1.0 / (p as f64).sqrt(); p],
        };
        generate(&design, &GrossErrorSpec::default().with_delta(delta), seed).unwrap()
    }

    #[test]
    fn stationary_start_converges_immediately() {
        // y = X θ* exactly, so the gradient vanishes at θ*
        let x = array![[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]];
        let t = array![0.5, -0.25];
        let ds = Dataset::new(x.clone(), x.dot(&t)).unwrap();
        let trace = solve_pgd(&ds, &LossSpec::welsch(0.5).unwrap(), &SolverConfig::default(), &t).unwrap();
        assert!(trace.converged);
        assert!(trace.iterations <= 1);
    }

    #[test]
    fn iterates_stay_feasible() {
        let ds = data(100, 5, 0.2, 1);
        let cfg = SolverConfig { radius: 0.5, max_iters: 200, ..Default::default() };
        let init = Array1::from_elem(5, 3.0);
        let trace = solve_pgd(&ds, &LossSpec::welsch(0.1).unwrap(), &cfg, &init).unwrap();
        assert!(norm2(trace.theta_final.as_slice().unwrap()) <= 0.5 + 1e-12);
        assert_eq!(trace.iterates_norm_gap.last().copied(), Some(0.0));
        assert_eq!(trace.recorded_iterations.len(), trace.objective.len());
    }

    #[test]
    fn pgd_rejects_penalty() {
        let ds = data(20, 2, 0.0, 2);
        let cfg = SolverConfig { lambda_n: 0.1, ..Default::default() };
        assert!(solve_pgd(&ds, &LossSpec::squared(), &cfg, &Array1::zeros(2)).is_err());
        assert!(solve(&ds, &LossSpec::squared(), &cfg, &Array1::zeros(2)).is_ok());
    }

    #[test]
    fn zero_penalty_prox_matches_pgd_exactly() {
        let ds = data(80, 4, 0.1, 3);
        let spec = LossSpec::welsch(0.2).unwrap();
        let cfg = SolverConfig { max_iters: 300, ..Default::default() };
        let init = array![1.0, -2.0, 0.5, 3.0];
        let a = solve_pgd(&ds, &spec, &cfg, &init).unwrap();
        let b = solve_prox_gd(&ds, &spec, &cfg, &init).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn huge_penalty_gives_zero() {
        let ds = data(60, 6, 0.0, 4);
        let spec = LossSpec::welsch(0.1).unwrap();
        let g0 = empirical_gradient(&ds, &spec, &Array1::zeros(6)).unwrap();
        let lam = 10.0 * g0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cfg = SolverConfig { lambda_n: lam, step_size: 0.5, ..Default::default() };
        let trace = solve_prox_gd(&ds, &spec, &cfg, &Array1::from_elem(6, 1.0)).unwrap();
        assert!(trace.converged);
        assert!(trace.theta_final.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stride_records_sparse_history() {
        let ds = data(50, 3, 0.0, 5);
        let cfg = SolverConfig { record_stride: 5, max_iters: 23, tol: 1e-300, ..Default::default() };
        let trace = solve_pgd(&ds, &LossSpec::welsch(0.1).unwrap(), &cfg, &Array1::from_elem(3, 2.0)).unwrap();
        assert_eq!(trace.recorded_iterations, vec![0, 5, 10, 15, 20, 23]);
        assert_eq!(trace.iterations, 23);
        assert!(!trace.converged);
    }

    #[test]
    fn oversized_step_is_flagged() {
        let ds = data(50, 3, 0.0, 6);
        let lmax = gram_spectral_norm(&ds);
        let cfg = SolverConfig { step_size: 50.0 / lmax, radius: 1e6, ..Default::default() };
        let trace = solve_pgd(&ds, &LossSpec::squared(), &cfg, &Array1::from_elem(3, 1.0)).unwrap();
        assert!(trace.diverged);
        assert!(!trace.converged);
    }

    #[test]
    fn backtracking_rescues_large_step() {
        let ds = data(50, 3, 0.0, 7);
        let lmax = gram_spectral_norm(&ds);
        let cfg = SolverConfig { step_size: 50.0 / lmax, radius: 1e6, backtracking: true, ..Default::default() };
        let trace = solve_pgd(&ds, &LossSpec::squared(), &cfg, &Array1::from_elem(3, 1.0)).unwrap();
        assert!(trace.converged && !trace.diverged);
        assert!(trace.final_step <= 1.0 / lmax + 1e-12);
        for w in trace.objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn stationarity_certificate_at_interior_solution() {
        let ds = data(200, 4, 0.05, 8);
        let spec = LossSpec::welsch(0.1).unwrap();
        let cfg = SolverConfig::default();
        let trace = solve_pgd(&ds, &spec, &cfg, &Array1::zeros(4)).unwrap();
        assert!(trace.converged);
        let g = empirical_gradient(&ds, &spec, &trace.theta_final).unwrap();
        assert!(norm2(g.as_slice().unwrap()) <= 10.0 * cfg.tol / cfg.step_size);
    }

    #[test]
    fn f32_solver_runs() {
        let ds: Dataset<f32> = data(100, 3, 0.0, 9).cast();
        let cfg = SolverConfig { tol: 1e-5, ..Default::default() };
        let trace = solve_pgd(&ds, &LossSpec::<f32>::welsch(0.1).unwrap(), &cfg, &Array1::zeros(3)).unwrap();
        assert!(trace.converged);
        let truth = 1.0 / 3f32.sqrt();
        assert!(trace.theta_final.iter().all(|v| (v - truth).abs() < 0.3));
    }
}
