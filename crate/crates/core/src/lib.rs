//! Distributed weighted-sum evolutionary strategy for multi-objective
//! optimization.
//!
//! The crate is organised bottom-up:
//!
//! * [`mop`] – objective/decision vectors, Pareto dominance, weighted-sum
//!   scalarization and the bounded non-dominated [`Archive`].
//! * [`benchmarks`] – the six box-constrained test problems and samplers for
//!   their Pareto-optimal fronts.
//! * [`operators`] – initialization, round-robin partitioning, representative
//!   selection, max–min arithmetical crossover and time-variant mutation.
//! * [`engine`] – the generation loop, run sequentially, on in-process
//!   worker threads, or (through [`netproto`]) on remote workers. All three
//!   modes produce bitwise-identical results for the same seed.
//! * [`netproto`] – length-prefixed canonical-JSON wire protocol plus the
//!   server and worker loops.
//! * [`metrics`] – convergence metric, repeated-run statistics and the
//!   worker-count timing experiment.

pub mod benchmarks;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod mop;
pub mod netproto;
pub mod operators;

pub use benchmarks::{FrontSource, ParetoFrontSample, ProblemId, ProblemSpec};
pub use engine::{
    derive_stream_seed, multi_weight_run, run_local_parallel, run_sequential, EngineConfig,
    GenerationReport, RunResult,
};
pub use error::{Error, Result};
pub use metrics::{
    batch_convergence, convergence_metric, timing_experiment, ConvergenceReport, TimingReport,
};
pub use mop::{
    covers, dominates, non_dominated_filter, weighted_sum, Archive, Bounds, DecisionVector,
    Individual, ObjectiveVector, WeightVector,
};
pub use operators::{OperatorParams, SubPopulation};
