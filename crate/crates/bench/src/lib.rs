//! Seeded fixtures shared by the criterion benchmarks.

use dnesa_core::netproto::{Assign, AssignedMember, Message};
use dnesa_core::{Individual, ObjectiveVector, OperatorParams, ProblemSpec, WeightVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` uniform points in `[0, 1)^m`.
pub fn random_objectives(n: usize, m: usize, seed: u64) -> Vec<ObjectiveVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| ObjectiveVector((0..m).map(|_| rng.random()).collect()))
        .collect()
}

/// Evaluated individuals of `problem` at uniform random points.
pub fn random_individuals(problem: &ProblemSpec, n: usize, seed: u64) -> Vec<Individual> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = WeightVector::uniform(problem.n_objectives()).expect("non-empty");
    let b = problem.bounds();
    (0..n)
        .map(|_| {
            let genes: Vec<f64> = b
                .lower()
                .iter()
                .zip(b.upper())
                .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                .collect();
            let objectives = problem.evaluate(&genes).expect("in bounds");
            let fitness =
                dnesa_core::weighted_sum(&objectives, &weights).expect("matching lengths");
            Individual {
                genes: genes.into(),
                objectives,
                fitness,
            }
        })
        .collect()
}

/// A DTLZ2 assignment carrying `members` individuals.
pub fn sample_assign(members: usize) -> Message {
    let problem = ProblemSpec::dtlz2(3, 12).expect("valid instance");
    Message::Assign(Assign {
        run_id: 1,
        generation: 1,
        subpop_id: 0,
        stream_seed: 42,
        problem_id: problem.key(),
        operator_params: OperatorParams::defaults(problem.n_vars(), 300),
        weights: WeightVector::uniform(3).expect("non-empty"),
        bounds: problem.bounds().clone(),
        members: random_individuals(&problem, members, 5)
            .into_iter()
            .map(|i| AssignedMember {
                genes: i.genes.0,
                fitness: i.fitness,
            })
            .collect(),
    })
}
