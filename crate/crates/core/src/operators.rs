//! Per-generation genetic machinery: uniform initialization, round-robin
//! partitioning of the fitness-sorted population, representative selection,
//! subpopulation-based max–min arithmetical crossover (SBMAC) and
//! time-variant mutation (TVM).
//!
//! SBMAC recombines every member `x` of a subpopulation with the
//! subpopulation's best member `r`. Three children are formed,
//!
//! ```text
//! arithmetical  c_k = λ r_k + (1 - λ) x_k     λ ~ U[0, 1], once per pair
//! max           c_k = max(r_k, x_k)
//! min           c_k = min(r_k, x_k)
//! ```
//!
//! and the fittest child replaces `x` only if it is strictly fitter.
//!
//! TVM moves a gene toward a randomly chosen bound by
//! `Δ(t, y) = y (1 - r^((1 - t/T)^β))`, where `y` is the distance to that
//! bound and `r ~ U[0, 1)`. The step collapses to zero at `t = T`.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::benchmarks::ProblemSpec;
use crate::error::{Error, Result};
use crate::mop::{clamp_to_bounds, weighted_sum, Bounds, DecisionVector, Individual, WeightVector};

pub const DEFAULT_CROSSOVER_RATE: f64 = 0.9;
pub const DEFAULT_TVM_DEGREE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tvm_degree: f64,
    pub max_generations: u64,
}

impl OperatorParams {
    /// Crossover rate 0.9, mutation rate `1/n`, TVM degree 5.
    pub fn defaults(n_vars: usize, max_generations: u64) -> Self {
        OperatorParams {
            crossover_rate: DEFAULT_CROSSOVER_RATE,
            mutation_rate: 1.0 / n_vars.max(1) as f64,
            tvm_degree: DEFAULT_TVM_DEGREE,
            max_generations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::config(format!(
                    "{name} must lie in [0, 1], got {rate}"
                )));
            }
        }
        if !(self.tvm_degree.is_finite() && self.tvm_degree > 0.0) {
            return Err(Error::config(format!(
                "tvm_degree must be positive, got {}",
                self.tvm_degree
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubPopulation {
    pub id: usize,
    pub members: Vec<Individual>,
}

/// Evaluates decision vectors for one problem/weighting, counting every call
/// and recording each evaluated individual in order.
#[derive(Debug)]
pub struct Evaluator<'a> {
    problem: &'a ProblemSpec,
    weights: &'a WeightVector,
    generation: u64,
    delay: Duration,
    evaluations: u64,
    trail: Vec<Individual>,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a ProblemSpec, weights: &'a WeightVector, generation: u64) -> Self {
        Evaluator {
            problem,
            weights,
            generation,
            delay: Duration::ZERO,
            evaluations: 0,
            trail: Vec::new(),
        }
    }

    /// Sleeps for `delay` on every evaluation, emulating an expensive
    /// objective function.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn evaluate(&mut self, genes: DecisionVector) -> Result<Individual> {
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        let objectives = self.problem.evaluate(&genes)?;
        let fitness = weighted_sum(&objectives, self.weights)?;
        if fitness.is_nan() || objectives.iter().any(|f| f.is_nan()) {
            return Err(Error::NanObjective {
                generation: self.generation,
                genes: genes.0,
            });
        }
        self.evaluations += 1;
        let ind = Individual {
            genes,
            objectives,
            fitness,
        };
        self.trail.push(ind.clone());
        Ok(ind)
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    /// Every individual evaluated so far, in evaluation order.
    pub fn into_trail(self) -> Vec<Individual> {
        self.trail
    }
}

/// `size` individuals with genes drawn uniformly from `bounds`.
pub fn init_population<R: Rng + ?Sized>(
    size: usize,
    bounds: &Bounds,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    if size < 2 {
        return Err(Error::contract(format!(
            "population size must be >= 2, got {size}"
        )));
    }
    Ok((0..size)
        .map(|_| {
            let genes = bounds
                .lower()
                .iter()
                .zip(bounds.upper())
                .map(|(lo, hi)| {
                    let u: f64 = rng.random();
                    (lo + (hi - lo) * u).min(*hi)
                })
                .collect();
            Individual::unevaluated(DecisionVector(genes))
        })
        .collect())
}

/// Deals a fitness-sorted population round-robin: sorted index `k` goes to
/// subpopulation `k mod n_subpops`.
pub fn partition(population: Vec<Individual>, n_subpops: usize) -> Result<Vec<SubPopulation>> {
    if n_subpops == 0 || n_subpops > population.len() {
        return Err(Error::config(format!(
            "cannot split {} individuals into {n_subpops} subpopulations",
            population.len()
        )));
    }
    let mut subpops: Vec<SubPopulation> = (0..n_subpops)
        .map(|id| SubPopulation {
            id,
            members: Vec::with_capacity(population.len() / n_subpops + 1),
        })
        .collect();
    for (k, ind) in population.into_iter().enumerate() {
        subpops[k % n_subpops].members.push(ind);
    }
    Ok(subpops)
}

/// Index of the fittest member; the lowest index wins ties.
pub fn select_representative(subpop: &SubPopulation) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, m) in subpop.members.iter().enumerate() {
        if !m.is_evaluated() {
            return Err(Error::contract(format!(
                "member {i} of subpopulation {} has no fitness",
                subpop.id
            )));
        }
        if best.is_none_or(|b| m.fitness < subpop.members[b].fitness) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| Error::contract(format!("subpopulation {} is empty", subpop.id)))
}

/// The three SBMAC children of the pair `(rep, x)` for a given `λ`, in the
/// order arithmetical, max, min.
pub fn sbmac_children(rep: &[f64], x: &[f64], lambda: f64) -> [Vec<f64>; 3] {
    let arith = rep
        .iter()
        .zip(x)
        .map(|(r, v)| lambda * r + (1.0 - lambda) * v)
        .collect();
    let max = rep.iter().zip(x).map(|(r, v)| r.max(*v)).collect();
    let min = rep.iter().zip(x).map(|(r, v)| r.min(*v)).collect();
    [arith, max, min]
}

/// Subpopulation-based max–min arithmetical crossover around member `rep`.
///
/// Returns a subpopulation of the same size; the representative is always
/// passed through and other members are replaced only by strictly fitter
/// children.
pub fn sbmac<R: Rng + ?Sized>(
    mut subpop: SubPopulation,
    rep: usize,
    params: &OperatorParams,
    evaluator: &mut Evaluator<'_>,
    rng: &mut R,
) -> Result<SubPopulation> {
    if rep >= subpop.members.len() {
        return Err(Error::contract(format!(
            "representative index {rep} outside subpopulation of {}",
            subpop.members.len()
        )));
    }
    let bounds = evaluator.problem().bounds().clone();
    let rep_genes = subpop.members[rep].genes.clone();
    for i in 0..subpop.members.len() {
        if i == rep {
            continue;
        }
        let u: f64 = rng.random();
        if u >= params.crossover_rate {
            continue;
        }
        let lambda: f64 = rng.random();
        let mut best: Option<Individual> = None;
        for child in sbmac_children(&rep_genes, &subpop.members[i].genes, lambda) {
            let genes = clamp_to_bounds(&DecisionVector(child), &bounds)?;
            let child = evaluator.evaluate(genes)?;
            if best.as_ref().is_none_or(|b| child.fitness < b.fitness) {
                best = Some(child);
            }
        }
        if let Some(child) = best {
            if child.fitness < subpop.members[i].fitness {
                subpop.members[i] = child;
            }
        }
    }
    Ok(subpop)
}

/// Time-variant step size `y (1 - r^((1 - t/T)^β))`.
pub fn tvm_step(distance: f64, t: u64, max_generations: u64, degree: f64, r: f64) -> f64 {
    let progress = t as f64 / max_generations as f64;
    distance * (1.0 - r.powf((1.0 - progress).powf(degree)))
}

/// Time-variant mutation of `individual` at generation `t`.
///
/// Returns the individual unchanged (objectives intact) when no gene moved,
/// otherwise an unevaluated individual carrying the new genes.
pub fn tvm<R: Rng + ?Sized>(
    individual: &Individual,
    t: u64,
    params: &OperatorParams,
    bounds: &Bounds,
    rng: &mut R,
) -> Result<Individual> {
    let max_t = params.max_generations;
    if max_t == 0 || t > max_t {
        return Err(Error::contract(format!(
            "mutation generation {t} outside 0..={max_t}"
        )));
    }
    if individual.genes.len() != bounds.dim() {
        return Err(Error::contract("genes and bounds differ in length"));
    }
    let mut genes = individual.genes.0.clone();
    for (k, g) in genes.iter_mut().enumerate() {
        let u: f64 = rng.random();
        if u >= params.mutation_rate {
            continue;
        }
        let up = rng.random::<f64>() < 0.5;
        let r: f64 = rng.random();
        let (lo, hi) = (bounds.lower()[k], bounds.upper()[k]);
        *g = if up {
            (*g + tvm_step(hi - *g, t, max_t, params.tvm_degree, r)).min(hi)
        } else {
            (*g - tvm_step(*g - lo, t, max_t, params.tvm_degree, r)).max(lo)
        };
    }
    if genes == individual.genes.0 {
        Ok(individual.clone())
    } else {
        Ok(Individual::unevaluated(DecisionVector(genes)))
    }
}
