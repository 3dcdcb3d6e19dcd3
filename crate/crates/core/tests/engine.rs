use dnesa_core::{
    dominates, multi_weight_run, run_local_parallel, run_sequential, EngineConfig, ProblemSpec,
};

#[test]
fn p3_weight_sweep_spans_the_front() {
    let cfg = EngineConfig::new(ProblemSpec::p3(), 50, 300, 1, 11);
    let archive = multi_weight_run(&cfg, 10).unwrap();
    let objs = archive.objectives();
    assert!(objs.len() >= 10);
    for a in &objs {
        for b in &objs {
            assert!(!dominates(a, b).unwrap());
        }
    }
    let f1: Vec<f64> = objs.iter().map(|o| o[0]).collect();
    let lo = f1.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = f1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo <= 0.01, "min f1 {lo}");
    assert!(hi >= 3.99, "max f1 {hi}");
}

#[test]
fn every_archived_point_is_in_bounds() {
    for problem in ["P1", "P2/3", "P4", "DTLZ1/3/7"] {
        let spec: ProblemSpec = problem.parse().unwrap();
        let cfg = EngineConfig::new(spec.clone(), 30, 40, 3, 5);
        let result = run_sequential(&cfg).unwrap();
        assert!(result
            .archive
            .members()
            .iter()
            .all(|m| spec.bounds().contains(&m.genes)));
        assert!(spec.bounds().contains(&result.best.genes));
    }
}

#[test]
fn best_equals_minimum_of_history() {
    let cfg = EngineConfig::new(ProblemSpec::p4(), 24, 30, 2, 3);
    let r = run_sequential(&cfg).unwrap();
    let min = r
        .history
        .iter()
        .map(|h| h.best_fitness)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(r.best.fitness, min);
    assert_eq!(
        r.history.last().unwrap().evaluations_so_far,
        r.total_evaluations
    );
}

#[test]
fn evaluations_per_generation_stay_within_budget() {
    let cfg = EngineConfig::new(ProblemSpec::dtlz2(3, 12).unwrap(), 40, 25, 4, 9);
    let r = run_sequential(&cfg).unwrap();
    assert_eq!(r.history[0].evaluations_so_far, 40);
    for w in r.history.windows(2) {
        // Three children plus one mutated copy per non-representative member.
        assert!(w[1].evaluations_so_far - w[0].evaluations_so_far <= 4 * (40 - 4));
    }
}

#[test]
fn p1_parallel_run_is_bitwise_sequential() {
    let cfg = EngineConfig::new(ProblemSpec::p1(), 40, 50, 4, 2024);
    let a = run_sequential(&cfg).unwrap().to_canonical_json();
    let b = run_local_parallel(&cfg, 4).unwrap().to_canonical_json();
    let c = run_local_parallel(&cfg, 1).unwrap().to_canonical_json();
    assert_eq!(a, b);
    assert_eq!(a, c);
}
