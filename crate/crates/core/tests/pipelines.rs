use tspq_core::hybrid::{
    append_archive, load_archive, optimize_parameters, solve, solve_hybrid, solve_quantum,
    CostModel, EncodedRoute, Encoding, Method, SolveConfig,
};
use tspq_core::instance::{european_cities, select_subinstance, TspInstance};
use tspq_core::qsim::NoiseModel;
use tspq_core::qubo::{encode_tsp_qubo, qubo_to_ising};
use tspq_core::route::RouteProblem;

fn inst(n: usize, seed: u64) -> TspInstance<f64> {
    select_subinstance(&european_cities(), n, seed, 8).unwrap()
}

#[test]
fn four_city_qubo_mostly_optimal() {
    let hits = (0..10)
        .filter(|&seed| {
            let cfg = SolveConfig {
                seed,
                encoding: Some(Encoding::Qubo),
                ..SolveConfig::new(Method::Quantum)
            };
            let r = solve_quantum(&inst(4, seed), &cfg).unwrap();
            (r.approximation_ratio - 1.0).abs() < 1e-12
        })
        .count();
    assert!(hits >= 8, "{hits}/10");
}

#[test]
fn four_city_trace_is_monotone() {
    let q = encode_tsp_qubo(&inst(4, 0), 2.0).unwrap();
    let model = CostModel::ising(qubo_to_ising(&q));
    let o = optimize_parameters(&model, &SolveConfig::default(), None, &|_| None, 0).unwrap();
    assert!(o.trace.windows(2).all(|w| w[1].best <= w[0].best));
    assert!(o.evaluations <= 100);
}

#[test]
fn noisy_eight_city_compact_record() {
    let cfg = SolveConfig {
        encoding: Some(Encoding::Compact),
        noise: Some(NoiseModel::default()),
        ..SolveConfig::new(Method::Quantum)
    };
    let i = inst(8, 0);
    let r = solve_quantum(&i, &cfg).unwrap();
    i.validate_tour(&r.best_tour).unwrap();
    assert!(r.approximation_ratio >= 1.0 - 1e-9);
    assert!(r.valid_sample_fraction > 0.0 && r.valid_sample_fraction <= 1.0);
}

#[test]
fn hybrid_eight_cities_valid() {
    let i = inst(8, 0);
    for method in [Method::Hybrid, Method::HybridMl] {
        let r = solve_hybrid(&i, &SolveConfig::new(method)).unwrap();
        assert_eq!(r.method, method);
        assert_eq!(r.best_tour.order()[0], i.start());
        assert_eq!(*r.best_tour.order().last().unwrap(), i.end());
        assert_eq!(r.best_cost, i.tour_cost(&r.best_tour).unwrap());
    }
}

#[test]
fn one_cluster_is_quantum_only() {
    for seed in 0..3 {
        let i = inst(7, seed);
        let q = solve(
            &i,
            &SolveConfig {
                seed,
                ..SolveConfig::new(Method::Quantum)
            },
            &[],
        )
        .unwrap();
        let h = solve(
            &i,
            &SolveConfig {
                seed,
                k: 1,
                ..SolveConfig::new(Method::Hybrid)
            },
            &[],
        )
        .unwrap();
        assert_eq!(q.record.best_cost, h.record.best_cost);
        assert_eq!(q.record.best_tour, h.record.best_tour);
    }
}

#[test]
fn archive_round_trip_feeds_warm_start() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.jsonl");
    let i = inst(5, 3);
    let first = solve(
        &i,
        &SolveConfig::new(Method::QuantumMl),
        &load_archive(&path).unwrap(),
    )
    .unwrap();
    append_archive(&path, &first.archive).unwrap();
    let loaded = load_archive(&path).unwrap();
    assert_eq!(loaded, first.archive);
    let again = solve(
        &i,
        &SolveConfig {
            seed: 1,
            ..SolveConfig::new(Method::QuantumMl)
        },
        &loaded,
    )
    .unwrap();
    assert!(again.record.approximation_ratio >= 1.0 - 1e-9);
}

#[test]
fn record_json_field_names() {
    let r = solve(&inst(4, 0), &SolveConfig::new(Method::Classical), &[])
        .unwrap()
        .record;
    let v = serde_json::to_value(&r).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    let mut expect = vec![
        "method",
        "n",
        "seed",
        "best_cost",
        "best_tour",
        "classical_cost",
        "approximation_ratio",
        "iterations_used",
        "circuit_depth",
        "total_gates",
        "valid_sample_fraction",
        "wall_time",
        "fallback_used",
    ];
    expect.sort_unstable();
    assert_eq!(keys, expect);
    assert_eq!(v["method"], "classical");
}

#[test]
fn compact_and_qubo_agree_on_route_optimum() {
    for seed in 0..5 {
        let route = RouteProblem::from_instance(&inst(5, seed));
        let best = |enc| {
            let e = EncodedRoute::new(&route, enc, 2.0).unwrap();
            let table = e.cost_model().unwrap().table().to_vec();
            table.into_iter().fold(f64::INFINITY, f64::min)
        };
        assert!((best(Encoding::Qubo) - best(Encoding::Compact)).abs() < 1e-9);
    }
}
