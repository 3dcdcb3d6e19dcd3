//! The generation loop.
//!
//! Each generation the population is sorted by fitness, dealt round-robin
//! into subpopulations, and every subpopulation is evolved independently
//! (representative selection, SBMAC, TVM, evaluation) from its own random
//! stream, seeded by [`derive_stream_seed`]. Outcomes are merged back in
//! subpopulation order, so the result does not depend on where or in which
//! order the subpopulations were processed.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::benchmarks::ProblemSpec;
use crate::error::{Error, Result};
use crate::mop::{Archive, Individual, WeightVector};
use crate::operators::{
    init_population, partition, sbmac, select_representative, tvm, Evaluator, OperatorParams,
    SubPopulation,
};

/// Generation index reserved for the weight-vector stream of
/// [`multi_weight_run`].
const WEIGHT_STREAM: u64 = u64::MAX;
/// Generation index reserved for the per-weight run seeds.
const WEIGHT_RUN_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub problem: ProblemSpec,
    pub pop_size: usize,
    pub max_generations: u64,
    pub n_subpops: usize,
    pub master_seed: u64,
    pub weights: WeightVector,
    pub fitness_goal: Option<f64>,
    pub operator_params: OperatorParams,
    pub archive_capacity: usize,
    /// Artificial per-evaluation cost, for timing experiments.
    #[serde(skip)]
    pub eval_delay: Duration,
}

impl EngineConfig {
    /// Uniform weights, default operator parameters, no fitness goal.
    pub fn new(
        problem: ProblemSpec,
        pop_size: usize,
        max_generations: u64,
        n_subpops: usize,
        master_seed: u64,
    ) -> Self {
        let weights =
            WeightVector::uniform(problem.n_objectives()).expect("problems have objectives");
        let operator_params = OperatorParams::defaults(problem.n_vars(), max_generations);
        EngineConfig {
            problem,
            pop_size,
            max_generations,
            n_subpops,
            master_seed,
            weights,
            fitness_goal: None,
            operator_params,
            archive_capacity: Archive::DEFAULT_CAPACITY,
            eval_delay: Duration::ZERO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::config(format!(
                "pop_size must be >= 2, got {}",
                self.pop_size
            )));
        }
        if self.n_subpops == 0 || self.n_subpops > self.pop_size {
            return Err(Error::config(format!(
                "need 1 <= n_subpops <= pop_size, got n_subpops={} pop_size={}",
                self.n_subpops, self.pop_size
            )));
        }
        if self.weights.len() != self.problem.n_objectives() {
            return Err(Error::config(format!(
                "{} weights for a {}-objective problem",
                self.weights.len(),
                self.problem.n_objectives()
            )));
        }
        if self.operator_params.max_generations != self.max_generations {
            return Err(Error::config(format!(
                "operator max_generations {} differs from max_generations {}",
                self.operator_params.max_generations, self.max_generations
            )));
        }
        if self.archive_capacity == 0 {
            return Err(Error::config("archive_capacity must be positive"));
        }
        if self.fitness_goal.is_some_and(f64::is_nan) {
            return Err(Error::config("fitness_goal is NaN"));
        }
        self.operator_params.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub generation: u64,
    pub best_fitness: f64,
    pub evaluations_so_far: u64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Outcome of a run. Wall-clock fields are excluded from serialization so
/// that results of different execution modes can be compared byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub best: Individual,
    pub archive: Archive,
    pub history: Vec<GenerationReport>,
    pub total_evaluations: u64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl RunResult {
    /// Canonical, timing-free JSON encoding.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&serde_json::to_value(self).expect("run results serialize"))
            .expect("run results serialize")
    }
}

/// One unit of work: a subpopulation plus the seed of its random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SubpopTask {
    pub subpop_id: usize,
    pub stream_seed: u64,
    pub members: Vec<Individual>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubpopOutcome {
    pub subpop_id: usize,
    pub members: Vec<Individual>,
    pub evaluations: u64,
    /// Every individual evaluated while processing the task, in order.
    pub evaluated: Vec<Individual>,
}

/// Static description of a generation shared by all of its tasks.
#[derive(Debug, Clone, Copy)]
pub struct GenerationContext<'a> {
    pub problem: &'a ProblemSpec,
    pub weights: &'a WeightVector,
    pub params: &'a OperatorParams,
    pub generation: u64,
    pub eval_delay: Duration,
}

/// Runs the subpopulation tasks of one generation somewhere.
pub trait GenerationExecutor {
    /// Returns one outcome per task, ordered by `subpop_id`.
    fn execute(
        &mut self,
        ctx: GenerationContext<'_>,
        tasks: Vec<SubpopTask>,
    ) -> Result<Vec<SubpopOutcome>>;
}

/// Representative selection, SBMAC and TVM for one subpopulation. This is
/// the whole of a worker's job; it depends only on its arguments.
pub fn evolve_subpopulation(ctx: GenerationContext<'_>, task: SubpopTask) -> Result<SubpopOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(task.stream_seed);
    let mut evaluator =
        Evaluator::new(ctx.problem, ctx.weights, ctx.generation).with_delay(ctx.eval_delay);
    let subpop = SubPopulation {
        id: task.subpop_id,
        members: task.members,
    };
    let rep = select_representative(&subpop)?;
    let mut subpop = sbmac(subpop, rep, ctx.params, &mut evaluator, &mut rng)?;
    for i in 0..subpop.members.len() {
        if i == rep {
            continue;
        }
        let mutated = tvm(
            &subpop.members[i],
            ctx.generation,
            ctx.params,
            ctx.problem.bounds(),
            &mut rng,
        )?;
        subpop.members[i] = if mutated.is_evaluated() {
            mutated
        } else {
            evaluator.evaluate(mutated.genes)?
        };
    }
    Ok(SubpopOutcome {
        subpop_id: subpop.id,
        members: subpop.members,
        evaluations: evaluator.evaluations(),
        evaluated: evaluator.into_trail(),
    })
}

/// Processes tasks one after another on the calling thread.
#[derive(Debug, Default, Clone, Copy)]
pub struct SequentialExecutor;

impl GenerationExecutor for SequentialExecutor {
    fn execute(
        &mut self,
        ctx: GenerationContext<'_>,
        tasks: Vec<SubpopTask>,
    ) -> Result<Vec<SubpopOutcome>> {
        tasks
            .into_iter()
            .map(|t| evolve_subpopulation(ctx, t))
            .collect()
    }
}

/// Processes tasks on up to `n_workers` scoped threads pulling from a
/// shared queue.
#[derive(Debug, Clone, Copy)]
pub struct ThreadedExecutor {
    n_workers: usize,
}

impl ThreadedExecutor {
    pub fn new(n_workers: usize) -> Result<Self> {
        if n_workers == 0 {
            return Err(Error::config("n_workers must be positive"));
        }
        Ok(ThreadedExecutor { n_workers })
    }
}

impl GenerationExecutor for ThreadedExecutor {
    fn execute(
        &mut self,
        ctx: GenerationContext<'_>,
        tasks: Vec<SubpopTask>,
    ) -> Result<Vec<SubpopOutcome>> {
        let n = tasks.len();
        let queue: Vec<Mutex<Option<SubpopTask>>> =
            tasks.into_iter().map(|t| Mutex::new(Some(t))).collect();
        let results: Vec<Mutex<Option<Result<SubpopOutcome>>>> =
            (0..n).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..self.n_workers.min(n) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let task = queue[i]
                        .lock()
                        .unwrap()
                        .take()
                        .expect("each task is taken once");
                    *results[i].lock().unwrap() = Some(evolve_subpopulation(ctx, task));
                });
            }
        });
        results
            .into_iter()
            .map(|r| r.into_inner().unwrap().expect("every task ran"))
            .collect()
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the random stream for `(generation, subpop_id)` of a run.
///
/// Three chained SplitMix64 finalizers, `mix(mix(mix(seed) ^ generation) ^
/// subpop_id)`, each adding the golden-ratio increment `0x9E3779B97F4A7C15`
/// and multiplying by `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`. Since
/// the finalizer is a bijection, distinct subpopulation ids of the same
/// generation never share a seed.
pub fn derive_stream_seed(master_seed: u64, generation: u64, subpop_id: u64) -> u64 {
    mix64(mix64(mix64(master_seed) ^ generation) ^ subpop_id)
}

fn best_index(pop: &[Individual]) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate() {
        if ind.fitness < pop[best].fitness {
            best = i;
        }
    }
    best
}

/// Runs the generation loop with `executor`, calling `observer` after the
/// initial evaluation and after each generation.
pub fn run_with<E: GenerationExecutor + ?Sized>(
    config: &EngineConfig,
    executor: &mut E,
    observer: &mut dyn FnMut(&GenerationReport),
) -> Result<RunResult> {
    config.validate()?;
    let start = Instant::now();
    let problem = &config.problem;

    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(config.master_seed, 0, 0));
    let mut evaluator = Evaluator::new(problem, &config.weights, 0).with_delay(config.eval_delay);
    let mut population = init_population(config.pop_size, problem.bounds(), &mut init_rng)?
        .into_iter()
        .map(|ind| evaluator.evaluate(ind.genes))
        .collect::<Result<Vec<_>>>()?;
    let mut archive = Archive::new(config.archive_capacity)?;
    let mut total_evaluations = evaluator.evaluations();
    for ind in evaluator.into_trail() {
        archive.insert(ind);
    }

    let mut history = Vec::with_capacity(config.max_generations as usize + 1);
    let mut report = |generation: u64, pop: &[Individual], evals: u64| {
        let r = GenerationReport {
            generation,
            best_fitness: pop[best_index(pop)].fitness,
            evaluations_so_far: evals,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        observer(&r);
        history.push(r);
    };
    report(0, &population, total_evaluations);

    let goal_reached = |pop: &[Individual]| {
        config
            .fitness_goal
            .is_some_and(|g| pop[best_index(pop)].fitness <= g)
    };

    for generation in 1..=config.max_generations {
        if goal_reached(&population) {
            break;
        }
        population.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
        let tasks: Vec<SubpopTask> = partition(population, config.n_subpops)?
            .into_iter()
            .map(|s| SubpopTask {
                subpop_id: s.id,
                stream_seed: derive_stream_seed(config.master_seed, generation, s.id as u64),
                members: s.members,
            })
            .collect();
        let sizes: Vec<usize> = tasks.iter().map(|t| t.members.len()).collect();
        let ctx = GenerationContext {
            problem,
            weights: &config.weights,
            params: &config.operator_params,
            generation,
            eval_delay: config.eval_delay,
        };
        let outcomes = executor.execute(ctx, tasks)?;
        if outcomes.len() != sizes.len() {
            return Err(Error::Protocol(format!(
                "generation {generation}: expected {} subpopulation outcomes, got {}",
                sizes.len(),
                outcomes.len()
            )));
        }
        population = Vec::with_capacity(config.pop_size);
        for (id, (outcome, size)) in outcomes.into_iter().zip(&sizes).enumerate() {
            // Up to three crossover children and one mutant per
            // non-representative member.
            let budget = 4 * (*size as u64 - 1);
            if outcome.subpop_id != id
                || outcome.members.len() != *size
                || outcome.evaluations != outcome.evaluated.len() as u64
                || outcome.evaluations > budget
            {
                return Err(Error::Protocol(format!(
                    "generation {generation}: inconsistent outcome for subpopulation {id} \
                     (id {}, {} members, {} evaluations, {} recorded)",
                    outcome.subpop_id,
                    outcome.members.len(),
                    outcome.evaluations,
                    outcome.evaluated.len()
                )));
            }
            total_evaluations += outcome.evaluations;
            for ind in outcome.evaluated {
                archive.insert(ind);
            }
            population.extend(outcome.members);
        }
        report(generation, &population, total_evaluations);
    }

    let best = population[best_index(&population)].clone();
    Ok(RunResult {
        best,
        archive,
        history,
        total_evaluations,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_sequential(config: &EngineConfig) -> Result<RunResult> {
    run_with(config, &mut SequentialExecutor, &mut |_| {})
}

/// Same computation as [`run_sequential`], with the subpopulations of each
/// generation processed concurrently by up to `n_workers` threads.
pub fn run_local_parallel(config: &EngineConfig, n_workers: usize) -> Result<RunResult> {
    run_with(config, &mut ThreadedExecutor::new(n_workers)?, &mut |_| {})
}

/// The weight vectors used by [`multi_weight_run`]: the uniform vector
/// followed by `count - 1` uniform samples of the simplex.
pub fn weight_vectors(
    n_objectives: usize,
    count: usize,
    master_seed: u64,
) -> Result<Vec<WeightVector>> {
    let mut out = vec![WeightVector::uniform(n_objectives)?];
    let mut rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(master_seed, WEIGHT_STREAM, 0));
    while out.len() < count {
        let e: Vec<f64> = (0..n_objectives).map(|_| Exp1.sample(&mut rng)).collect();
        out.push(WeightVector::normalized(e)?);
    }
    Ok(out)
}

/// One run per weight vector, merged into a single non-dominated archive.
/// The first run uses uniform weights and `config.master_seed` itself.
pub fn multi_weight_run(config: &EngineConfig, n_weight_vectors: usize) -> Result<Archive> {
    if n_weight_vectors == 0 {
        return Err(Error::config("n_weight_vectors must be positive"));
    }
    let weights = weight_vectors(
        config.problem.n_objectives(),
        n_weight_vectors,
        config.master_seed,
    )?;
    let mut merged = Archive::new(config.archive_capacity)?;
    for (k, w) in weights.into_iter().enumerate() {
        let mut cfg = config.clone();
        cfg.weights = w;
        if k > 0 {
            cfg.master_seed = derive_stream_seed(config.master_seed, WEIGHT_RUN_STREAM, k as u64);
        }
        for m in run_sequential(&cfg)?.archive.members() {
            merged.insert(m.clone());
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mop::dominates;

    fn p3(pop: usize, gens: u64, seed: u64) -> EngineConfig {
        EngineConfig::new(ProblemSpec::p3(), pop, gens, 1, seed)
    }

    #[test]
    fn zero_generations_reports_initial_best() {
        let r = run_sequential(&p3(20, 0, 4)).unwrap();
        assert_eq!(r.total_evaluations, 20);
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.best.fitness, r.history[0].best_fitness);
    }

    #[test]
    fn best_fitness_never_increases() {
        let r = run_sequential(&p3(50, 300, 8)).unwrap();
        assert_eq!(r.history.len(), 301);
        for w in r.history.windows(2) {
            assert!(w[1].best_fitness <= w[0].best_fitness);
        }
        let min = r
            .history
            .iter()
            .map(|h| h.best_fitness)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.best.fitness, min);
    }

    #[test]
    fn fitness_goal_stops_early() {
        let mut cfg = p3(30, 300, 2);
        cfg.fitness_goal = Some(1.5);
        let r = run_sequential(&cfg).unwrap();
        assert!(r.best.fitness <= 1.5);
        assert!(r.history.len() < 301);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = p3(4, 10, 0);
        cfg.n_subpops = 5;
        assert!(matches!(run_sequential(&cfg), Err(Error::Config(_))));
        let mut cfg = p3(4, 10, 0);
        cfg.weights = WeightVector::uniform(3).unwrap();
        assert!(matches!(run_sequential(&cfg), Err(Error::Config(_))));
        let mut cfg = p3(4, 10, 0);
        cfg.operator_params.max_generations = 3;
        assert!(matches!(run_sequential(&cfg), Err(Error::Config(_))));
        assert!(run_local_parallel(&p3(4, 1, 0), 0).is_err());
    }

    #[test]
    fn stream_seed_golden_and_distinct() {
        assert_eq!(derive_stream_seed(0, 0, 0), derive_stream_seed(0, 0, 0));
        assert_ne!(derive_stream_seed(0, 0, 0), derive_stream_seed(0, 0, 1));
        assert_ne!(derive_stream_seed(0, 1, 0), derive_stream_seed(0, 0, 1));
    }

    #[test]
    fn parallel_matches_sequential() {
        let mut cfg = EngineConfig::new(ProblemSpec::p1(), 40, 30, 4, 123);
        let seq = run_sequential(&cfg).unwrap();
        for workers in [1, 3, 4, 8] {
            let par = run_local_parallel(&cfg, workers).unwrap();
            assert_eq!(seq.to_canonical_json(), par.to_canonical_json());
        }
        cfg.n_subpops = 1;
        assert_eq!(
            run_sequential(&cfg).unwrap().to_canonical_json(),
            run_local_parallel(&cfg, 1).unwrap().to_canonical_json()
        );
    }

    #[test]
    fn single_weight_run_equals_uniform_run_archive() {
        let cfg = p3(20, 20, 9);
        let merged = multi_weight_run(&cfg, 1).unwrap();
        assert_eq!(merged, run_sequential(&cfg).unwrap().archive);
        assert!(multi_weight_run(&cfg, 0).is_err());
    }

    #[test]
    fn weight_vectors_start_uniform() {
        let ws = weight_vectors(3, 5, 1).unwrap();
        assert_eq!(ws.len(), 5);
        assert_eq!(ws[0], WeightVector::uniform(3).unwrap());
        for w in &ws {
            assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn merged_archive_is_non_dominated() {
        let archive = multi_weight_run(&p3(30, 50, 5), 4).unwrap();
        let objs = archive.objectives();
        for a in &objs {
            for b in &objs {
                assert!(!dominates(a, b).unwrap());
            }
        }
    }
}
