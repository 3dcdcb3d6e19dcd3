//! `dnesa`: run, serve, work, bench, metric and front subcommands.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod manifest;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use dnesa_core::netproto::{worker_run_with, Server, WorkerOptions};
use dnesa_core::{
    batch_convergence, run_sequential, timing_experiment, GenerationReport, ProblemSpec, RunResult,
};

use crate::manifest::{Overrides, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "dnesa",
    version,
    about = "Distributed weighted-sum evolutionary optimizer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run manifest.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    pop: Option<usize>,
    #[arg(long, value_name = "N")]
    gens: Option<u64>,
    #[arg(long, value_name = "N")]
    subpops: Option<usize>,
    /// Output CSV (overrides the manifest's output_path).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the optimizer in-process and write the history CSV.
    Run {
        #[command(flatten)]
        common: Common,
        /// Append a wall_seconds column to the history CSV.
        #[arg(long)]
        wall_clock: bool,
    },
    /// Coordinate a distributed run over TCP workers.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "HOST:PORT", default_value = "127.0.0.1:7878")]
        listen: String,
        /// Workers to wait for before starting.
        #[arg(long, value_name = "N")]
        workers: Option<usize>,
        #[arg(long)]
        wall_clock: bool,
    },
    /// Serve subpopulation assignments for a server.
    Work {
        #[arg(long, value_name = "HOST:PORT")]
        connect: String,
        #[arg(long)]
        name: Option<String>,
        /// Seconds to keep retrying the initial connection.
        #[arg(long, value_name = "SECS", default_value_t = 5.0)]
        connect_timeout: f64,
        /// Drop the connection on receiving the N-th assignment.
        #[arg(long, value_name = "N", hide = true)]
        fail_after: Option<u64>,
        /// Artificial cost of one evaluation.
        #[arg(long, value_name = "MS", hide = true, default_value_t = 0.0)]
        delay_ms: f64,
    },
    /// Wall time against client count; writes the timing CSV.
    Bench {
        #[command(flatten)]
        common: Common,
    },
    /// Convergence over independent multi-weight runs; writes the metric CSV.
    Metric {
        #[command(flatten)]
        common: Common,
    },
    /// Sample a problem's Pareto front as headerless CSV.
    Front {
        /// Problem key, e.g. P3 or DTLZ2/3/12.
        problem: String,
        count: usize,
        /// Defaults to standard output.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<dnesa_core::Error> for Failure {
    fn from(e: dnesa_core::Error) -> Self {
        use dnesa_core::Error::*;
        match e {
            Config(_) | Unsupported(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Run { common, wall_clock } => cmd_run(&common, wall_clock),
        Command::Serve {
            common,
            listen,
            workers,
            wall_clock,
        } => cmd_serve(&common, &listen, workers, wall_clock),
        Command::Work {
            connect,
            name,
            connect_timeout,
            fail_after,
            delay_ms,
        } => cmd_work(&connect, name, connect_timeout, fail_after, delay_ms),
        Command::Bench { common } => cmd_bench(&common),
        Command::Metric { common } => cmd_metric(&common),
        Command::Front {
            problem,
            count,
            out,
        } => cmd_front(&problem, count, out.as_deref()),
    }
}

fn load(common: &Common, workers: Option<usize>) -> Result<RunManifest, Failure> {
    let mut m = RunManifest::load(&common.config).map_err(Failure::Usage)?;
    m.apply(&Overrides {
        seed: common.seed,
        pop: common.pop,
        gens: common.gens,
        subpops: common.subpops,
        workers,
        out: common.out.clone(),
    });
    Ok(m)
}

fn write_output(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn history_csv(history: &[GenerationReport], wall_clock: bool) -> String {
    let mut out = String::from("generation,best_fitness,evaluations");
    out.push_str(if wall_clock { ",wall_seconds\n" } else { "\n" });
    for r in history {
        let _ = write!(
            out,
            "{},{},{}",
            r.generation, r.best_fitness, r.evaluations_so_far
        );
        if wall_clock {
            let _ = write!(out, ",{}", r.wall_seconds);
        }
        out.push('\n');
    }
    out
}

fn vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(f64::to_string).collect();
    format!("[{}]", parts.join(", "))
}

fn report_result(result: &RunResult, history_path: &Path, wall_clock: bool) -> CliResult {
    write_output(history_path, &history_csv(&result.history, wall_clock))?;
    println!("best genes: {}", vector(&result.best.genes));
    println!("best objectives: {}", vector(&result.best.objectives));
    println!("best fitness: {}", result.best.fitness);
    println!("evaluations: {}", result.total_evaluations);
    println!("archive size: {}", result.archive.len());
    println!("history: {}", history_path.display());
    Ok(())
}

fn cmd_run(common: &Common, wall_clock: bool) -> CliResult {
    let m = load(common, None)?;
    let config = m.engine_config().map_err(Failure::Usage)?;
    let result = run_sequential(&config)?;
    report_result(&result, &m.output_or("history.csv"), wall_clock)
}

fn cmd_serve(common: &Common, listen: &str, workers: Option<usize>, wall_clock: bool) -> CliResult {
    let m = load(common, workers)?;
    let config = m.engine_config().map_err(Failure::Usage)?;
    if m.workers == 0 {
        return Err(Failure::Usage("workers must be positive".into()));
    }
    let server = Server::bind(listen)?;
    println!("listening on {}", server.local_addr()?);
    let _ = std::io::stdout().flush();
    let run = server.run(&config, m.workers, &mut |r| {
        log::info!(
            "generation {} best_fitness {} evaluations {}",
            r.generation,
            r.best_fitness,
            r.evaluations_so_far
        );
    })?;
    log::info!(
        "{} assignments sent, {} re-dispatched",
        run.stats.assigns_sent,
        run.stats.redispatched
    );
    report_result(&run.result, &m.output_or("history.csv"), wall_clock)
}

fn cmd_work(
    connect: &str,
    name: Option<String>,
    connect_timeout: f64,
    fail_after: Option<u64>,
    delay_ms: f64,
) -> CliResult {
    let seconds = |v: f64, what: &str| {
        Duration::try_from_secs_f64(v).map_err(|_| Failure::Usage(format!("invalid {what} {v}")))
    };
    let mut options = WorkerOptions {
        connect_timeout: seconds(connect_timeout, "connect timeout")?,
        eval_delay: seconds(delay_ms / 1000.0, "delay")?,
        fail_after_assigns: fail_after,
        ..WorkerOptions::default()
    };
    if let Some(name) = name {
        options.name = name;
    }
    log::info!("{} connecting to {connect}", options.name);
    // Every worker-side failure, including configuration it was sent, is a
    // runtime failure of this process.
    worker_run_with(connect, &options).map_err(|e| Failure::Runtime(e.to_string()))
}

fn cmd_bench(common: &Common) -> CliResult {
    let m = load(common, None)?;
    let config = m.engine_config().map_err(Failure::Usage)?;
    let delay = m.injected_delay().map_err(Failure::Usage)?;
    let report = timing_experiment(&config, &m.client_counts, delay)?;
    let path = m.output_or("timing.csv");
    write_output(&path, &report.to_csv())?;
    for (clients, secs) in &report.rows {
        println!("{clients} clients: {secs:.3} s");
    }
    Ok(())
}

fn cmd_metric(common: &Common) -> CliResult {
    let m = load(common, None)?;
    let config = m.engine_config().map_err(Failure::Usage)?;
    let report = batch_convergence(&config, m.n_runs, m.n_weight_vectors)?;
    let path = m.output_or("convergence.csv");
    write_output(&path, &report.to_csv())?;
    println!(
        "{} runs, mean convergence {}",
        report.n_runs, report.mean_cv
    );
    Ok(())
}

fn cmd_front(problem: &str, count: usize, out: Option<&Path>) -> CliResult {
    let spec: ProblemSpec = problem.parse()?;
    if count < 2 {
        return Err(Failure::Usage(format!(
            "front sample needs at least 2 points, got {count}"
        )));
    }
    let sample = spec.sample_pareto_front(count)?;
    let mut csv = String::new();
    for p in &sample.points {
        let parts: Vec<String> = p.iter().map(f64::to_string).collect();
        csv.push_str(&parts.join(","));
        csv.push('\n');
    }
    match out {
        Some(path) => write_output(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_csv_layout() {
        let h = vec![
            GenerationReport {
                generation: 0,
                best_fitness: 2.5,
                evaluations_so_far: 20,
                wall_seconds: 0.25,
            },
            GenerationReport {
                generation: 1,
                best_fitness: 1.0,
                evaluations_so_far: 70,
                wall_seconds: 0.5,
            },
        ];
        assert_eq!(
            history_csv(&h, false),
            "generation,best_fitness,evaluations\n0,2.5,20\n1,1,70\n"
        );
        assert_eq!(
            history_csv(&h, true),
            "generation,best_fitness,evaluations,wall_seconds\n0,2.5,20,0.25\n1,1,70,0.5\n"
        );
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
