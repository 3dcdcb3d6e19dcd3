//! Convergence metric, repeated-run convergence statistics and the
//! worker-count timing experiment.
//!
//! The convergence value of a solution set is the mean, over its
//! non-dominated members, of the Euclidean distance to the nearest point of
//! a sample of the true Pareto front. Lower is better; zero means every
//! solution lies on a sampled front point.

use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{ParetoFrontSample, ProblemId, ProblemSpec};
use crate::engine::{derive_stream_seed, multi_weight_run, run_local_parallel, EngineConfig};
use crate::error::{Error, Result};
use crate::mop::{non_dominated_filter, squared_distance, ObjectiveVector};

/// Front sample size used by [`batch_convergence`] for `problem`.
pub fn default_front_size(problem: &ProblemSpec) -> usize {
    match problem.id() {
        ProblemId::Dtlz1 | ProblemId::Dtlz2 => 250_000,
        _ => 500,
    }
}

/// Static k-d tree over a point set for nearest-neighbour queries.
#[derive(Debug, Clone)]
struct KdTree {
    dim: usize,
    /// Coordinates in tree order: the median of every index range `lo..hi`
    /// sits at `(lo + hi) / 2`.
    coords: Vec<f64>,
}

impl KdTree {
    fn new(points: &[ObjectiveVector]) -> Self {
        let dim = points.first().map_or(0, |p| p.len());
        let mut order: Vec<usize> = (0..points.len()).collect();
        Self::arrange(points, &mut order, 0, dim);
        let coords = order
            .iter()
            .flat_map(|&i| points[i].iter().copied())
            .collect();
        KdTree { dim, coords }
    }

    fn arrange(points: &[ObjectiveVector], idx: &mut [usize], depth: usize, dim: usize) {
        if idx.len() <= 1 {
            return;
        }
        let axis = depth % dim;
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        let (left, right) = idx.split_at_mut(mid);
        Self::arrange(points, left, depth + 1, dim);
        Self::arrange(points, &mut right[1..], depth + 1, dim);
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    /// Squared distance from `q` to the nearest stored point.
    fn nearest_sq(&self, q: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        self.search(0, self.len(), 0, q, &mut best);
        best
    }

    fn search(&self, lo: usize, hi: usize, depth: usize, q: &[f64], best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = self.point(mid);
        *best = best.min(squared_distance(p, q));
        let axis = depth % self.dim;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, depth + 1, q, best);
        if diff * diff < *best {
            self.search(far.0, far.1, depth + 1, q, best);
        }
    }
}

/// A front sample indexed for repeated convergence queries.
#[derive(Debug, Clone)]
pub struct FrontIndex {
    tree: KdTree,
}

impl FrontIndex {
    pub fn new(front: &ParetoFrontSample) -> Result<Self> {
        if front.points.len() < 2 {
            return Err(Error::contract("front sample needs at least 2 points"));
        }
        let dim = front.points[0].len();
        if front.points.iter().any(|p| p.len() != dim) || dim == 0 {
            return Err(Error::contract("front sample points differ in dimension"));
        }
        Ok(FrontIndex {
            tree: KdTree::new(&front.points),
        })
    }

    pub fn convergence(&self, solutions: &[ObjectiveVector]) -> Result<f64> {
        if solutions.is_empty() {
            return Err(Error::contract(
                "convergence metric needs at least one solution",
            ));
        }
        if let Some(bad) = solutions.iter().find(|s| s.len() != self.tree.dim) {
            return Err(Error::contract(format!(
                "solution has {} objectives, front has {}",
                bad.len(),
                self.tree.dim
            )));
        }
        let survivors = non_dominated_filter(solutions)?;
        let total: f64 = survivors
            .iter()
            .map(|s| self.tree.nearest_sq(s).sqrt())
            .sum();
        Ok(total / survivors.len() as f64)
    }
}

/// Mean distance from the non-dominated members of `solutions` to their
/// nearest front sample point.
pub fn convergence_metric(solutions: &[ObjectiveVector], front: &ParetoFrontSample) -> Result<f64> {
    FrontIndex::new(front)?.convergence(solutions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub problem_id: String,
    pub n_runs: usize,
    pub individuals: usize,
    pub generations: u64,
    pub per_run_cv: Vec<f64>,
    pub mean_cv: f64,
}

impl ConvergenceReport {
    /// `run_index,cv` rows followed by a `mean` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run_index,cv\n");
        for (i, cv) in self.per_run_cv.iter().enumerate() {
            let _ = writeln!(out, "{i},{cv}");
        }
        let _ = writeln!(out, "mean,{}", self.mean_cv);
        out
    }
}

/// Convergence of `n_runs` independent multi-weight runs against the
/// problem's front sample of [`default_front_size`] points.
pub fn batch_convergence(
    config: &EngineConfig,
    n_runs: usize,
    n_weight_vectors: usize,
) -> Result<ConvergenceReport> {
    let front = config
        .problem
        .sample_pareto_front(default_front_size(&config.problem))?;
    batch_convergence_with_front(config, n_runs, n_weight_vectors, &front)
}

/// As [`batch_convergence`] with an explicit front sample. Run `r` uses
/// master seed `derive_stream_seed(config.master_seed, r, 0)`; runs execute
/// in parallel and are reported in index order.
pub fn batch_convergence_with_front(
    config: &EngineConfig,
    n_runs: usize,
    n_weight_vectors: usize,
    front: &ParetoFrontSample,
) -> Result<ConvergenceReport> {
    if n_runs == 0 {
        return Err(Error::config("n_runs must be positive"));
    }
    config.validate()?;
    let index = FrontIndex::new(front)?;
    let per_run_cv = (0..n_runs)
        .into_par_iter()
        .map(|r| {
            let mut cfg = config.clone();
            cfg.master_seed = derive_stream_seed(config.master_seed, r as u64, 0);
            let archive = multi_weight_run(&cfg, n_weight_vectors)?;
            index.convergence(&archive.objectives())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean_cv = per_run_cv.iter().sum::<f64>() / n_runs as f64;
    Ok(ConvergenceReport {
        problem_id: config.problem.key(),
        n_runs,
        individuals: config.pop_size,
        generations: config.max_generations,
        per_run_cv,
        mean_cv,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub problem_id: String,
    /// `(n_clients, wall_seconds)`.
    pub rows: Vec<(usize, f64)>,
}

impl TimingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_clients,wall_seconds\n");
        for (c, s) in &self.rows {
            let _ = writeln!(out, "{c},{s}");
        }
        out
    }
}

/// Wall time of the same configuration with `C` subpopulations on `C`
/// worker threads, for each `C` in `client_counts` (strictly increasing).
pub fn timing_experiment(
    config: &EngineConfig,
    client_counts: &[usize],
    injected_delay: Duration,
) -> Result<TimingReport> {
    if client_counts.is_empty() {
        return Err(Error::config("client_counts is empty"));
    }
    if client_counts[0] == 0 || client_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(format!(
            "client counts must be positive and strictly increasing: {client_counts:?}"
        )));
    }
    let mut rows = Vec::with_capacity(client_counts.len());
    for &clients in client_counts {
        let mut cfg = config.clone();
        cfg.n_subpops = clients;
        cfg.eval_delay = injected_delay;
        let result = run_local_parallel(&cfg, clients)?;
        log::info!("{} clients: {:.3} s", clients, result.wall_seconds);
        rows.push((clients, result.wall_seconds));
    }
    Ok(TimingReport {
        problem_id: config.problem.key(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::FrontSource;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ov(v: &[f64]) -> ObjectiveVector {
        ObjectiveVector(v.to_vec())
    }

    fn brute_nearest(front: &[ObjectiveVector], q: &[f64]) -> f64 {
        front
            .iter()
            .map(|p| p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn kd_tree_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for dim in [2, 3, 5] {
            let pts: Vec<ObjectiveVector> = (0..2000)
                .map(|_| ov(&(0..dim).map(|_| rng.random::<f64>()).collect::<Vec<_>>()))
                .collect();
            let tree = KdTree::new(&pts);
            for _ in 0..300 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 1.4 - 0.2).collect();
                assert_eq!(tree.nearest_sq(&q), brute_nearest(&pts, &q));
            }
        }
    }

    #[test]
    fn zero_on_front_points() {
        let front = ProblemSpec::p3().sample_pareto_front(50).unwrap();
        assert_eq!(convergence_metric(&front.points, &front).unwrap(), 0.0);
    }

    #[test]
    fn single_solution_distance() {
        let front = ParetoFrontSample {
            points: vec![ov(&[0.0, 1.0]), ov(&[1.0, 0.0])],
            source: FrontSource::Analytic,
        };
        let cv = convergence_metric(&[ov(&[0.0, 4.0])], &front).unwrap();
        assert!((cv - 3.0).abs() < 1e-15);
    }

    #[test]
    fn dominated_solutions_are_ignored() {
        let front = ProblemSpec::p3().sample_pareto_front(100).unwrap();
        let sols = [ov(&[0.0, 4.1]), ov(&[4.1, 0.0]), ov(&[5.0, 5.0])];
        let expected = (brute_nearest(&front.points, &sols[0]).sqrt()
            + brute_nearest(&front.points, &sols[1]).sqrt())
            / 2.0;
        assert!((convergence_metric(&sols, &front).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn metric_errors() {
        let front = ProblemSpec::p3().sample_pareto_front(10).unwrap();
        assert!(convergence_metric(&[], &front).is_err());
        assert!(convergence_metric(&[ov(&[1.0, 2.0, 3.0])], &front).is_err());
    }

    #[test]
    fn report_csv_layout() {
        let r = ConvergenceReport {
            problem_id: "P3".into(),
            n_runs: 2,
            individuals: 10,
            generations: 5,
            per_run_cv: vec![0.5, 0.25],
            mean_cv: 0.375,
        };
        assert_eq!(r.to_csv(), "run_index,cv\n0,0.5\n1,0.25\nmean,0.375\n");
        let t = TimingReport {
            problem_id: "P1".into(),
            rows: vec![(1, 2.5), (2, 1.25)],
        };
        assert_eq!(t.to_csv(), "n_clients,wall_seconds\n1,2.5\n2,1.25\n");
    }

    #[test]
    fn single_run_batch() {
        let cfg = EngineConfig::new(ProblemSpec::p3(), 20, 20, 1, 3);
        let r = batch_convergence(&cfg, 1, 2).unwrap();
        assert_eq!(r.per_run_cv.len(), 1);
        assert_eq!(r.per_run_cv[0], r.mean_cv);
        assert!(batch_convergence(&cfg, 0, 2).is_err());
    }

    #[test]
    fn timing_rejects_bad_counts() {
        let cfg = EngineConfig::new(ProblemSpec::p3(), 20, 2, 1, 3);
        assert!(timing_experiment(&cfg, &[], Duration::ZERO).is_err());
        assert!(timing_experiment(&cfg, &[2, 2], Duration::ZERO).is_err());
        assert!(timing_experiment(&cfg, &[0, 1], Duration::ZERO).is_err());
        let r = timing_experiment(&cfg, &[1], Duration::ZERO).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].0, 1);
    }
}
