use std::io::Write;
use std::net::TcpStream;
use std::thread;
use std::time::Duration;

use dnesa_core::engine::{run_sequential, EngineConfig};
use dnesa_core::netproto::{
    decode_frame, worker_run_with, write_frame, Message, Server, ServerOptions, WorkerOptions,
    PROTOCOL_VERSION,
};
use dnesa_core::{Error, ProblemSpec};

fn spawn_workers(
    addr: String,
    options: Vec<WorkerOptions>,
) -> Vec<thread::JoinHandle<Result<(), Error>>> {
    options
        .into_iter()
        .map(|o| {
            let addr = addr.clone();
            thread::spawn(move || worker_run_with(&addr, &o))
        })
        .collect()
}

fn opts(name: &str) -> WorkerOptions {
    WorkerOptions {
        name: name.into(),
        ..WorkerOptions::default()
    }
}

fn short_timeout() -> ServerOptions {
    ServerOptions {
        generation_timeout: Duration::from_secs(20),
    }
}

#[test]
fn single_worker_matches_sequential() {
    let cfg = EngineConfig::new(ProblemSpec::p3(), 20, 40, 2, 7);
    let server = Server::bind("127.0.0.1:0")
        .unwrap()
        .with_options(short_timeout());
    let addr = server.local_addr().unwrap().to_string();
    let workers = spawn_workers(addr, vec![opts("w0")]);
    let dist = server.run(&cfg, 1, &mut |_| {}).unwrap();
    for w in workers {
        w.join().unwrap().unwrap();
    }
    let seq = run_sequential(&cfg).unwrap();
    assert_eq!(dist.result.to_canonical_json(), seq.to_canonical_json());
}

#[test]
fn four_workers_four_subpops_accounting() {
    let cfg = EngineConfig::new(ProblemSpec::p1(), 40, 15, 4, 21);
    let server = Server::bind("127.0.0.1:0")
        .unwrap()
        .with_options(short_timeout());
    let addr = server.local_addr().unwrap().to_string();
    let workers = spawn_workers(addr, (0..4).map(|i| opts(&format!("w{i}"))).collect());
    let dist = server.run(&cfg, 4, &mut |_| {}).unwrap();
    for w in workers {
        w.join().unwrap().unwrap();
    }
    assert_eq!(dist.stats.assigns_per_generation, vec![4; 15]);
    assert_eq!(dist.stats.assigns_sent, 60);
    assert_eq!(dist.stats.results_accepted, 60);
    assert_eq!(dist.stats.redispatched, 0);
    assert_eq!(
        dist.result.to_canonical_json(),
        run_sequential(&cfg).unwrap().to_canonical_json()
    );
}

#[test]
fn killed_worker_is_redispatched_with_identical_result() {
    let cfg = EngineConfig::new(ProblemSpec::p1(), 40, 20, 4, 99);
    let server = Server::bind("127.0.0.1:0")
        .unwrap()
        .with_options(short_timeout());
    let addr = server.local_addr().unwrap().to_string();
    let mut options: Vec<_> = (0..3).map(|i| opts(&format!("w{i}"))).collect();
    options.push(WorkerOptions {
        fail_after_assigns: Some(7),
        ..opts("flaky")
    });
    let workers = spawn_workers(addr, options);
    let dist = server.run(&cfg, 4, &mut |_| {}).unwrap();
    let outcomes: Vec<_> = workers.into_iter().map(|w| w.join().unwrap()).collect();
    assert_eq!(outcomes.iter().filter(|o| o.is_err()).count(), 1);
    assert!(dist.stats.redispatched >= 1);
    assert_eq!(
        dist.result.to_canonical_json(),
        run_sequential(&cfg).unwrap().to_canonical_json()
    );
}

#[test]
fn merge_order_ignores_arrival_order() {
    let cfg = EngineConfig::new(ProblemSpec::p4(), 24, 8, 3, 5);
    let server = Server::bind("127.0.0.1:0")
        .unwrap()
        .with_options(short_timeout());
    let addr = server.local_addr().unwrap().to_string();
    let slow = WorkerOptions {
        eval_delay: Duration::from_millis(2),
        ..opts("slow")
    };
    let workers = spawn_workers(addr, vec![slow, opts("fast1"), opts("fast2")]);
    let dist = server.run(&cfg, 3, &mut |_| {}).unwrap();
    for w in workers {
        w.join().unwrap().unwrap();
    }
    assert_eq!(
        dist.result.to_canonical_json(),
        run_sequential(&cfg).unwrap().to_canonical_json()
    );
}

#[test]
fn wrong_protocol_version_is_rejected_and_server_keeps_listening() {
    let cfg = EngineConfig::new(ProblemSpec::p3(), 10, 5, 1, 3);
    let server = Server::bind("127.0.0.1:0")
        .unwrap()
        .with_options(short_timeout());
    let addr = server.local_addr().unwrap().to_string();

    // The server only starts accepting inside `run`, so the rejected client
    // and the good worker are driven from another thread.
    let client = thread::spawn(move || {
        let mut s = TcpStream::connect(&addr).unwrap();
        write_frame(
            &mut s,
            &Message::Hello {
                protocol_version: PROTOCOL_VERSION + 1,
                worker_name: "old".into(),
            },
        )
        .unwrap();
        s.flush().unwrap();
        let reply = decode_frame(&mut s).unwrap();
        assert!(matches!(reply, Message::Shutdown { .. }));
        // The server closes the connection afterwards.
        assert!(decode_frame(&mut s).is_err());
        worker_run_with(&addr, &opts("good"))
    });
    let dist = server.run(&cfg, 1, &mut |_| {}).unwrap();
    client.join().unwrap().unwrap();
    assert_eq!(
        dist.result.to_canonical_json(),
        run_sequential(&cfg).unwrap().to_canonical_json()
    );
}

#[test]
fn missing_workers_time_out() {
    let cfg = EngineConfig::new(ProblemSpec::p3(), 10, 5, 1, 3);
    let server = Server::bind("127.0.0.1:0")
        .unwrap()
        .with_options(ServerOptions {
            generation_timeout: Duration::from_millis(300),
        });
    assert!(matches!(
        server.run(&cfg, 2, &mut |_| {}),
        Err(Error::Timeout(_))
    ));
}

#[test]
fn unreachable_server_fails_within_connect_timeout() {
    // Bind then drop to get a port nobody listens on.
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let started = std::time::Instant::now();
    let err = worker_run_with(
        &format!("127.0.0.1:{port}"),
        &WorkerOptions {
            connect_timeout: Duration::from_millis(300),
            ..opts("lonely")
        },
    )
    .unwrap_err();
    assert!(matches!(err, Error::Connection(_)));
    assert!(started.elapsed() < Duration::from_secs(5));
}

#[test]
fn observer_sees_every_generation() {
    let cfg = EngineConfig::new(ProblemSpec::p3(), 10, 6, 2, 3);
    let server = Server::bind("127.0.0.1:0")
        .unwrap()
        .with_options(short_timeout());
    let addr = server.local_addr().unwrap().to_string();
    let workers = spawn_workers(addr, vec![opts("a"), opts("b")]);
    let mut seen = Vec::new();
    server
        .run(&cfg, 2, &mut |r| seen.push(r.generation))
        .unwrap();
    for w in workers {
        w.join().unwrap().unwrap();
    }
    assert_eq!(seen, (0..=6).collect::<Vec<u64>>());
}
