//! JSON run manifests and their command-line overrides.

use std::path::{Path, PathBuf};
use std::time::Duration;

use dnesa_core::{Archive, EngineConfig, OperatorParams, ProblemSpec, WeightVector};
use serde::{Deserialize, Serialize};

/// Experiment record. Only `problem` is required; everything else falls back
/// to the engine defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub problem: ProblemSpec,
    #[serde(default = "default_pop_size")]
    pub pop_size: usize,
    #[serde(default = "default_max_generations")]
    pub max_generations: u64,
    #[serde(default = "default_n_subpops")]
    pub n_subpops: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Uniform when absent.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub fitness_goal: Option<f64>,
    #[serde(default)]
    pub crossover_rate: Option<f64>,
    /// `1 / n_vars` when absent.
    #[serde(default)]
    pub mutation_rate: Option<f64>,
    #[serde(default)]
    pub tvm_degree: Option<f64>,
    #[serde(default = "default_archive_capacity")]
    pub archive_capacity: usize,
    /// Workers expected by `serve`.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Client counts swept by `bench`.
    #[serde(default = "default_client_counts")]
    pub client_counts: Vec<usize>,
    /// Independent runs for `metric`.
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
    /// Weight vectors per run for `metric`.
    #[serde(default = "default_n_weight_vectors")]
    pub n_weight_vectors: usize,
    /// Artificial cost of one evaluation, in milliseconds.
    #[serde(default)]
    pub injected_delay_ms: f64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

fn default_pop_size() -> usize {
    50
}
fn default_max_generations() -> u64 {
    100
}
fn default_n_subpops() -> usize {
    1
}
fn default_archive_capacity() -> usize {
    Archive::DEFAULT_CAPACITY
}
fn default_workers() -> usize {
    1
}
fn default_client_counts() -> Vec<usize> {
    vec![1, 2, 4, 8]
}
fn default_n_runs() -> usize {
    30
}
fn default_n_weight_vectors() -> usize {
    10
}

/// Flag values that take precedence over the manifest.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub pop: Option<usize>,
    pub gens: Option<u64>,
    pub subpops: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunManifest {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.master_seed = v;
        }
        if let Some(v) = o.pop {
            self.pop_size = v;
        }
        if let Some(v) = o.gens {
            self.max_generations = v;
        }
        if let Some(v) = o.subpops {
            self.n_subpops = v;
        }
        if let Some(v) = o.workers {
            self.workers = v;
        }
        if let Some(v) = &o.out {
            self.output_path = Some(v.clone());
        }
    }

    pub fn injected_delay(&self) -> Result<Duration, String> {
        Duration::try_from_secs_f64(self.injected_delay_ms / 1000.0)
            .map_err(|_| format!("invalid injected_delay_ms {}", self.injected_delay_ms))
    }

    /// Builds and validates the engine configuration.
    pub fn engine_config(&self) -> Result<EngineConfig, String> {
        let mut config = EngineConfig::new(
            self.problem.clone(),
            self.pop_size,
            self.max_generations,
            self.n_subpops,
            self.master_seed,
        );
        if let Some(w) = &self.weights {
            config.weights = WeightVector::new(w.clone()).map_err(|e| e.to_string())?;
        }
        config.fitness_goal = self.fitness_goal;
        let defaults = OperatorParams::defaults(self.problem.n_vars(), self.max_generations);
        config.operator_params = OperatorParams {
            crossover_rate: self.crossover_rate.unwrap_or(defaults.crossover_rate),
            mutation_rate: self.mutation_rate.unwrap_or(defaults.mutation_rate),
            tvm_degree: self.tvm_degree.unwrap_or(defaults.tvm_degree),
            max_generations: self.max_generations,
        };
        config.archive_capacity = self.archive_capacity;
        config.eval_delay = self.injected_delay()?;
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }

    pub fn output_or(&self, default: &str) -> PathBuf {
        self.output_path
            .clone()
            .unwrap_or_else(|| PathBuf::from(default))
    }
}
