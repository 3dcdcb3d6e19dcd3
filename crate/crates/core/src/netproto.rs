//! Master–worker protocol.
//!
//! Every message travels as one frame: a 4-byte big-endian payload length
//! followed by the payload, a canonical JSON object (keys sorted, numbers in
//! shortest round-trip form) whose `"type"` field names the variant.
//!
//! ```text
//! worker                           server
//!   | -- hello ----------------------> |
//!   | <----------------------- assign  |   one per subpopulation,
//!   | -- result ---------------------> |   round-robin over workers
//!   |              ...                 |
//!   | <--------------------- shutdown  |
//! ```
//!
//! Workers are stateless: an `assign` carries everything needed to evolve a
//! subpopulation, including the seed of its random stream, so a lost
//! assignment is simply sent to another worker and recomputed identically.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::net::{Shutdown as NetShutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::benchmarks::ProblemSpec;
use crate::engine::{
    derive_stream_seed, evolve_subpopulation, run_with, EngineConfig, GenerationContext,
    GenerationExecutor, GenerationReport, RunResult, SubpopOutcome, SubpopTask,
};
use crate::error::{Error, Result};
use crate::mop::{Bounds, DecisionVector, Individual, ObjectiveVector, WeightVector};
use crate::operators::OperatorParams;

pub const PROTOCOL_VERSION: u32 = 1;
pub const MAX_FRAME_LEN: usize = 16 * 1024 * 1024;
pub const DEFAULT_GENERATION_TIMEOUT: Duration = Duration::from_secs(60);
pub const TIMEOUT_ENV: &str = "DNESA_TIMEOUT_SECS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Message {
    Hello {
        protocol_version: u32,
        worker_name: String,
    },
    Assign(Assign),
    Result(WorkResult),
    Shutdown {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assign {
    pub run_id: u64,
    pub generation: u64,
    pub subpop_id: u64,
    pub stream_seed: u64,
    pub problem_id: String,
    pub operator_params: OperatorParams,
    pub weights: WeightVector,
    pub bounds: Bounds,
    pub members: Vec<AssignedMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignedMember {
    pub genes: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkResult {
    pub run_id: u64,
    pub generation: u64,
    pub subpop_id: u64,
    pub members: Vec<EvaluatedMember>,
    pub evaluations: u64,
    /// Every individual evaluated for this assignment, in order.
    pub evaluated: Vec<EvaluatedMember>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatedMember {
    pub genes: Vec<f64>,
    pub objectives: Vec<f64>,
    pub fitness: f64,
}

impl From<Individual> for EvaluatedMember {
    fn from(ind: Individual) -> Self {
        EvaluatedMember {
            genes: ind.genes.0,
            objectives: ind.objectives.0,
            fitness: ind.fitness,
        }
    }
}

impl From<EvaluatedMember> for Individual {
    fn from(m: EvaluatedMember) -> Self {
        Individual {
            genes: DecisionVector(m.genes),
            objectives: ObjectiveVector(m.objectives),
            fitness: m.fitness,
        }
    }
}

fn hex_preview(bytes: &[u8]) -> String {
    const LIMIT: usize = 256;
    let mut s: String = bytes
        .iter()
        .take(LIMIT)
        .map(|b| format!("{b:02x}"))
        .collect();
    if bytes.len() > LIMIT {
        s.push_str(&format!("... ({} bytes)", bytes.len()));
    }
    s
}

/// Length-prefixed canonical JSON encoding of `msg`.
pub fn encode_frame(msg: &Message) -> Result<Vec<u8>> {
    let value = serde_json::to_value(msg).map_err(|e| Error::Encode(e.to_string()))?;
    // serde_json::Map is ordered by key, so this output is canonical.
    let payload = serde_json::to_vec(&value).map_err(|e| Error::Encode(e.to_string()))?;
    frame_payload(&payload)
}

/// Prefixes raw payload bytes with their length.
pub fn frame_payload(payload: &[u8]) -> Result<Vec<u8>> {
    if payload.len() > MAX_FRAME_LEN {
        return Err(Error::Encode(format!(
            "payload of {} bytes exceeds the {MAX_FRAME_LEN}-byte frame limit",
            payload.len()
        )));
    }
    let mut out = Vec::with_capacity(payload.len() + 4);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

/// Reads exactly one frame from `r`.
pub fn decode_frame<R: Read + ?Sized>(r: &mut R) -> Result<Message> {
    let mut header = [0u8; 4];
    r.read_exact(&mut header)?;
    let len = u32::from_be_bytes(header) as usize;
    if len > MAX_FRAME_LEN {
        return Err(Error::Protocol(format!(
            "declared frame length {len} exceeds {MAX_FRAME_LEN} (header {})",
            hex_preview(&header)
        )));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    decode_payload(&payload)
}

fn decode_payload(payload: &[u8]) -> Result<Message> {
    let text = std::str::from_utf8(payload).map_err(|e| {
        Error::Protocol(format!(
            "payload is not UTF-8 ({e}); frame {}",
            hex_preview(payload)
        ))
    })?;
    serde_json::from_str(text).map_err(|e| {
        Error::Protocol(format!(
            "malformed message ({e}); frame {}",
            hex_preview(payload)
        ))
    })
}

pub fn write_frame<W: Write + ?Sized>(w: &mut W, msg: &Message) -> Result<()> {
    w.write_all(&encode_frame(msg)?)?;
    w.flush()?;
    Ok(())
}

fn generation_timeout_from_env() -> Duration {
    std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|s| s.is_finite() && *s > 0.0)
        .map(Duration::from_secs_f64)
        .unwrap_or(DEFAULT_GENERATION_TIMEOUT)
}

#[derive(Debug, Clone)]
pub struct ServerOptions {
    /// Limit on waiting for all results of one generation, and for the
    /// expected workers to join. Defaults to `DNESA_TIMEOUT_SECS` or 60 s.
    pub generation_timeout: Duration,
}

impl Default for ServerOptions {
    fn default() -> Self {
        ServerOptions {
            generation_timeout: generation_timeout_from_env(),
        }
    }
}

/// Message accounting of a distributed run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DispatchStats {
    pub assigns_sent: u64,
    pub results_accepted: u64,
    /// Assignments re-sent after their worker disconnected.
    pub redispatched: u64,
    /// Assigns sent per generation (index 0 is generation 1).
    pub assigns_per_generation: Vec<u64>,
}

#[derive(Debug)]
pub struct DistributedRun {
    pub result: RunResult,
    pub stats: DispatchStats,
}

enum Event {
    Joined {
        id: usize,
        name: String,
        stream: TcpStream,
    },
    Frame {
        id: usize,
        msg: Message,
    },
    Left {
        id: usize,
        reason: String,
    },
}

/// Listening side of a distributed run.
#[derive(Debug)]
pub struct Server {
    listener: TcpListener,
    options: ServerOptions,
}

impl Server {
    pub fn bind<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            options: ServerOptions::default(),
        })
    }

    pub fn with_options(mut self, options: ServerOptions) -> Self {
        self.options = options;
        self
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Waits for `expected_workers` workers, then runs the generation loop
    /// with every subpopulation evolved remotely.
    pub fn run(
        self,
        config: &EngineConfig,
        expected_workers: usize,
        observer: &mut dyn FnMut(&GenerationReport),
    ) -> Result<DistributedRun> {
        config.validate()?;
        if expected_workers == 0 {
            return Err(Error::config("expected_workers must be positive"));
        }
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::channel();
        let acceptor = {
            let stop = Arc::clone(&stop);
            let listener = self.listener;
            thread::spawn(move || accept_loop(listener, tx, stop))
        };

        let mut exec = DistributedExecutor {
            rx,
            workers: BTreeMap::new(),
            run_id: derive_stream_seed(config.master_seed, u64::MAX - 2, 0),
            problem_key: config.problem.key(),
            timeout: self.options.generation_timeout,
            stats: DispatchStats::default(),
            cursor: 0,
        };
        let outcome = exec
            .await_workers(expected_workers)
            .and_then(|()| run_with(config, &mut exec, observer));

        let reason = match &outcome {
            Ok(_) => "run complete".to_string(),
            Err(e) => format!("run aborted: {e}"),
        };
        exec.shutdown_all(&reason);
        stop.store(true, Ordering::SeqCst);
        // Unblock the acceptor.
        let _ = TcpStream::connect_timeout(&wake_addr(addr), Duration::from_secs(1));
        let _ = acceptor.join();

        outcome.map(|result| DistributedRun {
            result,
            stats: exec.stats,
        })
    }
}

fn wake_addr(addr: SocketAddr) -> SocketAddr {
    if addr.ip().is_unspecified() {
        let ip = if addr.is_ipv4() {
            std::net::Ipv4Addr::LOCALHOST.into()
        } else {
            std::net::Ipv6Addr::LOCALHOST.into()
        };
        SocketAddr::new(ip, addr.port())
    } else {
        addr
    }
}

/// Binds `listen`, waits for `expected_workers` and runs `config`.
pub fn server_run(
    config: &EngineConfig,
    listen: &str,
    expected_workers: usize,
) -> Result<RunResult> {
    Ok(Server::bind(listen)?
        .run(config, expected_workers, &mut |_| {})?
        .result)
}

fn accept_loop(listener: TcpListener, tx: Sender<Event>, stop: Arc<AtomicBool>) {
    let mut next_id = 0usize;
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let stream = match conn {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let id = next_id;
        next_id += 1;
        let tx = tx.clone();
        thread::spawn(move || handle_connection(id, stream, tx));
    }
}

fn handle_connection(id: usize, mut stream: TcpStream, tx: Sender<Event>) {
    let peer = stream
        .peer_addr()
        .map(|a| a.to_string())
        .unwrap_or_else(|_| "?".into());
    let _ = stream.set_nodelay(true);
    let _ = stream.set_read_timeout(Some(Duration::from_secs(30)));
    let name = match decode_frame(&mut stream) {
        Ok(Message::Hello {
            protocol_version,
            worker_name,
        }) if protocol_version == PROTOCOL_VERSION => worker_name,
        Ok(Message::Hello {
            protocol_version, ..
        }) => {
            log::warn!(
                "rejecting {peer}: protocol version {protocol_version}, expected {PROTOCOL_VERSION}"
            );
            let _ = write_frame(
                &mut stream,
                &Message::Shutdown {
                    reason: format!(
                        "protocol version {protocol_version} not supported (server speaks {PROTOCOL_VERSION})"
                    ),
                },
            );
            return;
        }
        Ok(other) => {
            log::warn!("rejecting {peer}: expected hello, got {other:?}");
            return;
        }
        Err(e) => {
            log::debug!("connection {peer} closed before hello: {e}");
            return;
        }
    };
    let _ = stream.set_read_timeout(None);
    let writer = match stream.try_clone() {
        Ok(w) => w,
        Err(e) => {
            log::warn!("cannot clone stream of {peer}: {e}");
            return;
        }
    };
    log::info!("worker {id} `{name}` joined from {peer}");
    if tx
        .send(Event::Joined {
            id,
            name,
            stream: writer,
        })
        .is_err()
    {
        return;
    }
    loop {
        match decode_frame(&mut stream) {
            Ok(msg) => {
                if tx.send(Event::Frame { id, msg }).is_err() {
                    return;
                }
            }
            Err(e) => {
                let _ = tx.send(Event::Left {
                    id,
                    reason: e.to_string(),
                });
                return;
            }
        }
    }
}

struct WorkerConn {
    name: String,
    stream: TcpStream,
}

struct Pending {
    frame: Vec<u8>,
    worker: Option<usize>,
    size: usize,
}

struct DistributedExecutor {
    rx: Receiver<Event>,
    workers: BTreeMap<usize, WorkerConn>,
    run_id: u64,
    problem_key: String,
    timeout: Duration,
    stats: DispatchStats,
    cursor: usize,
}

impl DistributedExecutor {
    fn await_workers(&mut self, expected: usize) -> Result<()> {
        let deadline = Instant::now() + self.timeout;
        while self.workers.len() < expected {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.rx.recv_timeout(left) {
                Ok(Event::Joined { id, name, stream }) => {
                    self.workers.insert(id, WorkerConn { name, stream });
                }
                Ok(Event::Left { id, reason }) => {
                    if let Some(w) = self.workers.remove(&id) {
                        log::warn!("worker {id} `{}` left before the run: {reason}", w.name);
                    }
                }
                Ok(Event::Frame { id, msg }) => {
                    log::warn!("ignoring unexpected message from worker {id}: {msg:?}");
                }
                Err(_) => {
                    return Err(Error::Timeout(format!(
                        "only {} of {expected} workers joined within {:?}",
                        self.workers.len(),
                        self.timeout
                    )))
                }
            }
        }
        log::info!("{} workers connected; starting run", self.workers.len());
        Ok(())
    }

    fn shutdown_all(&mut self, reason: &str) {
        let msg = Message::Shutdown {
            reason: reason.to_string(),
        };
        for w in self.workers.values_mut() {
            let _ = write_frame(&mut w.stream, &msg);
            let _ = w.stream.shutdown(NetShutdown::Write);
        }
        self.workers.clear();
    }

    /// Sends every unassigned task to the next live worker, round-robin.
    fn dispatch(&mut self, pending: &mut BTreeMap<u64, Pending>) {
        for (subpop, task) in pending.iter_mut().filter(|(_, p)| p.worker.is_none()) {
            while task.worker.is_none() && !self.workers.is_empty() {
                let ids: Vec<usize> = self.workers.keys().copied().collect();
                let id = ids[self.cursor % ids.len()];
                self.cursor += 1;
                let conn = self.workers.get_mut(&id).expect("listed worker");
                match conn
                    .stream
                    .write_all(&task.frame)
                    .and_then(|()| conn.stream.flush())
                {
                    Ok(()) => {
                        log::debug!("subpopulation {subpop} -> worker {id}");
                        task.worker = Some(id);
                        self.stats.assigns_sent += 1;
                        if let Some(n) = self.stats.assigns_per_generation.last_mut() {
                            *n += 1;
                        }
                    }
                    Err(e) => {
                        log::warn!("dropping worker {id} `{}`: {e}", conn.name);
                        self.workers.remove(&id);
                    }
                }
            }
        }
    }
}

impl GenerationExecutor for DistributedExecutor {
    fn execute(
        &mut self,
        ctx: GenerationContext<'_>,
        tasks: Vec<SubpopTask>,
    ) -> Result<Vec<SubpopOutcome>> {
        let generation = ctx.generation;
        self.stats.assigns_per_generation.push(0);
        let mut pending = BTreeMap::new();
        for task in tasks {
            let size = task.members.len();
            let msg = Message::Assign(Assign {
                run_id: self.run_id,
                generation,
                subpop_id: task.subpop_id as u64,
                stream_seed: task.stream_seed,
                problem_id: self.problem_key.clone(),
                operator_params: ctx.params.clone(),
                weights: ctx.weights.clone(),
                bounds: ctx.problem.bounds().clone(),
                members: task
                    .members
                    .into_iter()
                    .map(|m| AssignedMember {
                        genes: m.genes.0,
                        fitness: m.fitness,
                    })
                    .collect(),
            });
            pending.insert(
                task.subpop_id as u64,
                Pending {
                    frame: encode_frame(&msg)?,
                    worker: None,
                    size,
                },
            );
        }
        let expected = pending.len();
        let mut done: BTreeMap<u64, SubpopOutcome> = BTreeMap::new();
        self.dispatch(&mut pending);

        let deadline = Instant::now() + self.timeout;
        while done.len() < expected {
            let left = deadline.saturating_duration_since(Instant::now());
            let event = match self.rx.recv_timeout(left) {
                Ok(e) => e,
                Err(RecvTimeoutError::Timeout) | Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::Timeout(format!(
                        "generation {generation}: {} of {expected} results after {:?} \
                         ({} workers connected)",
                        done.len(),
                        self.timeout,
                        self.workers.len()
                    )))
                }
            };
            match event {
                Event::Joined { id, name, stream } => {
                    self.workers.insert(id, WorkerConn { name, stream });
                    self.dispatch(&mut pending);
                }
                Event::Left { id, reason } => {
                    let Some(w) = self.workers.remove(&id) else {
                        continue;
                    };
                    log::warn!("worker {id} `{}` disconnected: {reason}", w.name);
                    for (subpop, task) in pending.iter_mut() {
                        if task.worker == Some(id) {
                            log::warn!(
                                "re-dispatching subpopulation {subpop} of generation {generation}"
                            );
                            task.worker = None;
                            self.stats.redispatched += 1;
                        }
                    }
                    self.dispatch(&mut pending);
                }
                Event::Frame {
                    id,
                    msg: Message::Result(r),
                } => {
                    if r.run_id != self.run_id || r.generation != generation {
                        log::debug!("stale result from worker {id} ignored");
                        continue;
                    }
                    let Some(task) = pending.remove(&r.subpop_id) else {
                        log::debug!("duplicate result for subpopulation {} ignored", r.subpop_id);
                        continue;
                    };
                    if r.members.len() != task.size {
                        return Err(Error::Protocol(format!(
                            "worker {id} returned {} members for subpopulation {} of size {}",
                            r.members.len(),
                            r.subpop_id,
                            task.size
                        )));
                    }
                    self.stats.results_accepted += 1;
                    done.insert(
                        r.subpop_id,
                        SubpopOutcome {
                            subpop_id: r.subpop_id as usize,
                            members: r.members.into_iter().map(Individual::from).collect(),
                            evaluations: r.evaluations,
                            evaluated: r.evaluated.into_iter().map(Individual::from).collect(),
                        },
                    );
                }
                Event::Frame {
                    id,
                    msg: Message::Shutdown { reason },
                } => {
                    let name = self.workers.get(&id).map_or("?", |w| w.name.as_str());
                    return Err(Error::Protocol(format!(
                        "worker {id} `{name}` gave up: {reason}"
                    )));
                }
                Event::Frame { id, msg } => {
                    log::warn!("ignoring unexpected message from worker {id}: {msg:?}");
                }
            }
        }
        Ok(done.into_values().collect())
    }
}

#[derive(Debug, Clone)]
pub struct WorkerOptions {
    pub name: String,
    /// How long to keep retrying the initial connection.
    pub connect_timeout: Duration,
    /// Artificial per-evaluation cost.
    pub eval_delay: Duration,
    /// Fault injection: drop the connection upon receiving this many
    /// assignments, without answering the last one.
    pub fail_after_assigns: Option<u64>,
}

impl Default for WorkerOptions {
    fn default() -> Self {
        WorkerOptions {
            name: format!("worker-{}", std::process::id()),
            connect_timeout: Duration::from_secs(5),
            eval_delay: Duration::ZERO,
            fail_after_assigns: None,
        }
    }
}

fn connect_with_retry(endpoint: &str, timeout: Duration) -> Result<TcpStream> {
    let deadline = Instant::now() + timeout;
    let mut last_err = io::Error::new(io::ErrorKind::TimedOut, "connect timed out");
    loop {
        match endpoint.to_socket_addrs() {
            Ok(addrs) => {
                for addr in addrs {
                    let left = deadline.saturating_duration_since(Instant::now());
                    match TcpStream::connect_timeout(&addr, left.max(Duration::from_millis(10))) {
                        Ok(s) => return Ok(s),
                        Err(e) => last_err = e,
                    }
                }
            }
            Err(e) => last_err = e,
        }
        if Instant::now() >= deadline {
            return Err(Error::Connection(io::Error::new(
                last_err.kind(),
                format!("cannot reach {endpoint}: {last_err}"),
            )));
        }
        thread::sleep(Duration::from_millis(50));
    }
}

pub fn worker_run(connect_endpoint: &str) -> Result<()> {
    worker_run_with(connect_endpoint, &WorkerOptions::default())
}

/// Connects to a server and serves assignments until told to shut down.
pub fn worker_run_with(connect_endpoint: &str, options: &WorkerOptions) -> Result<()> {
    let mut stream = connect_with_retry(connect_endpoint, options.connect_timeout)?;
    let _ = stream.set_nodelay(true);
    write_frame(
        &mut stream,
        &Message::Hello {
            protocol_version: PROTOCOL_VERSION,
            worker_name: options.name.clone(),
        },
    )?;
    let mut received = 0u64;
    loop {
        match decode_frame(&mut stream)? {
            Message::Assign(assign) => {
                received += 1;
                if options.fail_after_assigns.is_some_and(|n| received >= n) {
                    log::warn!("injected fault: dropping connection after {received} assignments");
                    let _ = stream.shutdown(NetShutdown::Both);
                    return Err(Error::Connection(io::Error::new(
                        io::ErrorKind::ConnectionAborted,
                        "injected worker fault",
                    )));
                }
                log::info!(
                    "assign: generation {} subpopulation {} ({} members)",
                    assign.generation,
                    assign.subpop_id,
                    assign.members.len()
                );
                match process_assign(assign, options.eval_delay) {
                    Ok(result) => {
                        log::info!(
                            "result: generation {} subpopulation {} ({} evaluations)",
                            result.generation,
                            result.subpop_id,
                            result.evaluations
                        );
                        write_frame(&mut stream, &Message::Result(result))?;
                    }
                    Err(e) => {
                        let _ = write_frame(
                            &mut stream,
                            &Message::Shutdown {
                                reason: e.to_string(),
                            },
                        );
                        return Err(e);
                    }
                }
            }
            Message::Shutdown { reason } => {
                log::info!("server shut down: {reason}");
                return Ok(());
            }
            other => {
                return Err(Error::Protocol(format!(
                    "unexpected message from server: {other:?}"
                )));
            }
        }
    }
}

/// The worker's computation for one assignment.
pub fn process_assign(assign: Assign, eval_delay: Duration) -> Result<WorkResult> {
    let problem: ProblemSpec = assign
        .problem_id
        .parse()
        .map_err(|e| Error::Protocol(format!("unknown problem id `{}`: {e}", assign.problem_id)))?;
    if &assign.bounds != problem.bounds() {
        return Err(Error::Protocol(format!(
            "bounds in assignment do not match problem {}",
            assign.problem_id
        )));
    }
    let weights = WeightVector::new(assign.weights.as_slice().to_vec())
        .map_err(|e| Error::Protocol(format!("invalid weights: {e}")))?;
    if weights.len() != problem.n_objectives() {
        return Err(Error::Protocol(
            "weight count does not match the problem".into(),
        ));
    }
    assign
        .operator_params
        .validate()
        .map_err(|e| Error::Protocol(format!("invalid operator parameters: {e}")))?;
    if assign.generation == 0 || assign.generation > assign.operator_params.max_generations {
        return Err(Error::Protocol(format!(
            "generation {} outside 1..={}",
            assign.generation, assign.operator_params.max_generations
        )));
    }
    let members = assign
        .members
        .into_iter()
        .map(|m| {
            let objectives = problem.evaluate(&m.genes)?;
            Ok(Individual {
                genes: DecisionVector(m.genes),
                objectives,
                fitness: m.fitness,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ctx = GenerationContext {
        problem: &problem,
        weights: &weights,
        params: &assign.operator_params,
        generation: assign.generation,
        eval_delay,
    };
    let outcome = evolve_subpopulation(
        ctx,
        SubpopTask {
            subpop_id: assign.subpop_id as usize,
            stream_seed: assign.stream_seed,
            members,
        },
    )?;
    Ok(WorkResult {
        run_id: assign.run_id,
        generation: assign.generation,
        subpop_id: assign.subpop_id,
        members: outcome
            .members
            .into_iter()
            .map(EvaluatedMember::from)
            .collect(),
        evaluations: outcome.evaluations,
        evaluated: outcome
            .evaluated
            .into_iter()
            .map(EvaluatedMember::from)
            .collect(),
    })
}
