use ndarray::Array1;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::descent::{descend, SolveTrace};
use super::SolverConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::rng::{stream, Domain};
use crate::risk::Theta;
use crate::scalar::{distance, Scalar};

/// Uniform draw from the ball `{||θ||₂ <= radius}` in `p` dimensions.
pub fn sample_start<F: Scalar, R: Rng + ?Sized>(p: usize, radius: f64, rng: &mut R) -> Theta<F> {
    let mut dir: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
    let mut nrm = crate::scalar::norm2(&dir);
    while nrm == 0.0 {
        dir = (0..p).map(|_| StandardNormal.sample(rng)).collect();
        nrm = crate::scalar::norm2(&dir);
    }
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / p as f64) / nrm;
    Array1::from_iter(dir.into_iter().map(|v| F::of(v * scale)))
}

/// How independent solves are scheduled. Each solve is itself sequential, so
/// both modes produce identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub(crate) fn map<T: Send, U: Send>(self, items: Vec<T>, f: impl Fn(T) -> U + Sync + Send) -> Vec<U> {
        match self {
            Execution::Sequential => items.into_iter().map(f).collect(),
            Execution::Parallel => items.into_par_iter().map(f).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster<F> {
    pub representative: Theta<F>,
    /// Indices of the starts whose final iterate belongs here.
    pub members: Vec<usize>,
}

impl<F> Cluster<F> {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Outcome of running the solver from many random starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractabilityReport<F> {
    pub starts: usize,
    pub initial_points: Vec<Theta<F>>,
    pub finals: Vec<Theta<F>>,
    pub max_pairwise_gap: F,
    pub cluster_tol: F,
    pub clusters: Vec<Cluster<F>>,
    pub diverged: Vec<bool>,
    /// True when every start converged and all finals lie within `cluster_tol`.
    pub unique: bool,
    pub traces: Vec<SolveTrace<F>>,
}

impl<F: Scalar> TractabilityReport<F> {
    pub fn mean_iterations(&self) -> f64 {
        self.traces.iter().map(|t| t.iterations as f64).sum::<f64>() / self.traces.len().max(1) as f64
    }

    /// Index of the start whose final has the lowest objective.
    pub fn best_start(&self) -> usize {
        self.traces
            .iter()
            .enumerate()
            .filter(|(_, t)| t.final_objective.is_finite())
            .min_by(|a, b| a.1.final_objective.partial_cmp(&b.1.final_objective).expect("finite"))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn best_final(&self) -> &Theta<F> {
        &self.finals[self.best_start()]
    }

    pub fn any_diverged(&self) -> bool {
        self.diverged.iter().any(|&d| d)
    }
}

/// Single-linkage clusters: points closer than `tol` (transitively) share a cluster.
pub fn single_linkage_clusters<F: Scalar>(points: &[Theta<F>], tol: F) -> Vec<Cluster<F>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(
                points[i].as_slice().expect("contiguous"),
                points[j].as_slice().expect("contiguous"),
            );
            if d <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Cluster<F>> = Vec::new();
    let mut root_index: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        match root_index[root] {
            Some(c) => clusters[c].members.push(i),
            None => {
                root_index[root] = Some(clusters.len());
                clusters.push(Cluster {
                    representative: points[i].clone(),
                    members: vec![i],
                });
            }
        }
    }
    clusters
}

/// Multi-start probe with parallel execution.
pub fn probe_tractability<F: Scalar>(
    ds: &Dataset<F>,
    spec: &LossSpec<F>,
    cfg: &SolverConfig,
    n_starts: usize,
    cluster_tol: f64,
) -> Result<TractabilityReport<F>> {
    probe_tractability_with(ds, spec, cfg, n_starts, cluster_tol, Execution::Parallel)
}

/// Run the solver (projected or proximal per `cfg.lambda_n`) from `n_starts`
/// uniform starts in the ball; start `i` uses stream `i` of `cfg.seed`.
pub fn probe_tractability_with<F: Scalar>(
    ds: &Dataset<F>,
    spec: &LossSpec<F>,
    cfg: &SolverConfig,
    n_starts: usize,
    cluster_tol: f64,
    exec: Execution,
) -> Result<TractabilityReport<F>> {
    if n_starts < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 starts, got {n_starts}")));
    }
    if !(cluster_tol > 0.0) {
        return Err(Error::InvalidConfig(format!("cluster_tol must be positive, got {cluster_tol}")));
    }
    cfg.validate()?;
    let initial_points: Vec<Theta<F>> = (0..n_starts)
        .map(|i| sample_start(ds.p(), cfg.radius, &mut stream(cfg.seed, Domain::Start, i as u64)))
        .collect();
    let traces = exec
        .map(initial_points.clone(), |start| descend(ds, spec, cfg, &start))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let finals: Vec<Theta<F>> = traces.iter().map(|t| t.theta_final.clone()).collect();
    let diverged: Vec<bool> = traces.iter().map(|t| t.diverged).collect();
    let mut max_gap = F::zero();
    for i in 0..finals.len() {
        for j in (i + 1)..finals.len() {
            let d = distance(
                finals[i].as_slice().expect("contiguous"),
                finals[j].as_slice().expect("contiguous"),
            );
            if d > max_gap || d.is_nan() {
                max_gap = d;
            }
        }
    }
    let tol = F::of(cluster_tol);
    let clusters = single_linkage_clusters(&finals, tol);
    let unique = max_gap <= tol && !diverged.iter().any(|&d| d);
    Ok(TractabilityReport {
        starts: n_starts,
        initial_points,
        finals,
        max_pairwise_gap: max_gap,
        cluster_tol: tol,
        clusters,
        diverged,
        unique,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, DesignDistribution, DesignSpec, GrossErrorSpec};
    use crate::scalar::norm2;
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
    fn starts_are_inside_ball_and_deterministic() {
        for i in 0..200 {
            let t: Theta<f64> = sample_start(4, 2.5, &mut stream(1, Domain::Start, i));
            assert!(norm2(t.as_slice().unwrap()) <= 2.5);
            let again: Theta<f64> = sample_start(4, 2.5, &mut stream(1, Domain::Start, i));
            assert_eq!(t, again);
        }
    }

    #[test]
    fn start_radius_follows_beta_law() {
        // ||θ|| / r ~ Beta(p, 1), mean p / (p + 1)
        let mut rng = stream(3, Domain::Start, 0);
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|_| norm2(sample_start::<f64, _>(3, 2.0, &mut rng).as_slice().unwrap()) / 2.0)
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 0.75).abs() < 0.01, "{mean}");
    }

    #[test]
    fn clustering_is_single_linkage() {
        let pts = vec![array![0.0], array![0.6], array![1.2], array![5.0]];
        let c = single_linkage_clusters(&pts, 0.7);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].members, vec![0, 1, 2]);
        assert_eq!(c[1].members, vec![3]);
        assert_eq!(c.iter().map(Cluster::size).sum::<usize>(), 4);
    }

    #[test]
    fn convex_losses_are_unique() {
        let ds = data(150, 5, 0.3, 1);
        let cfg = SolverConfig { step_size: 0.5, ..Default::default() };
        for spec in [LossSpec::squared(), LossSpec::huber(1.0).unwrap()] {
            let rep = probe_tractability(&ds, &spec, &cfg, 6, 1e-3).unwrap();
            assert!(rep.unique, "{spec:?} gap {}", rep.max_pairwise_gap);
            assert_eq!(rep.clusters.len(), 1);
            assert_eq!(rep.clusters[0].size(), 6);
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let ds = data(100, 4, 0.2, 2);
        let spec = LossSpec::welsch(0.2).unwrap();
        let cfg = SolverConfig { seed: 5, max_iters: 500, ..Default::default() };
        let a = probe_tractability_with(&ds, &spec, &cfg, 4, 1e-3, Execution::Sequential).unwrap();
        let b = probe_tractability_with(&ds, &spec, &cfg, 4, 1e-3, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn probe_argument_checks() {
        let ds = data(20, 2, 0.0, 3);
        let spec = LossSpec::squared();
        assert!(probe_tractability(&ds, &spec, &SolverConfig::default(), 1, 1e-3).is_err());
        assert!(probe_tractability(&ds, &spec, &SolverConfig::default(), 3, 0.0).is_err());
    }

    #[test]
    fn divergence_marks_report_not_unique() {
        let ds = data(50, 3, 0.0, 4);
        let cfg = SolverConfig { step_size: 100.0, radius: 1e5, ..Default::default() };
        let rep = probe_tractability(&ds, &LossSpec::squared(), &cfg, 3, 1e-3).unwrap();
        assert!(rep.any_diverged());
        assert!(!rep.unique);
    }
}
