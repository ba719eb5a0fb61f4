//! Relaxation runs on reference graphs and trace invariants on random ones.

mod common;

use common::oracle::*;
use proptest::prelude::*;
use sra_core::controller::{
    read_trace_csv, relax_step, write_trace_csv, RunStatus, SraConfig, SraState,
};
use sra_core::routing::mean_route_hops;
use sra_core::{betweenness, generate, run_relaxation, CostVector, Graph, TopologySpec};

fn cfg(alpha: f64, beta_i: f64, k_max: usize, t_d: usize) -> SraConfig {
    SraConfig {
        alpha,
        beta_i,
        eps: 1e-5,
        k_max,
        t_d,
    }
}

#[test]
fn star_center_pressure_follows_geometric_approach() {
    let g = star(4);
    let c = SraConfig::default();
    let trace = run_relaxation(&g, &c).unwrap();
    assert_eq!(trace.status, RunStatus::Converged);
    assert_eq!(trace.switch_count(), 0);
    let mut prev = -1.0;
    for r in &trace.records {
        let expected = 1.0 - (1.0 - c.alpha).powi(r.k as i32);
        assert!(
            (r.s[0] - expected).abs() < 1e-12,
            "k = {}: {} vs {expected}",
            r.k,
            r.s[0]
        );
        assert!(r.s[0] > prev);
        prev = r.s[0];
        assert!(r.s[1..].iter().all(|&s| s == 0.0));
    }
    assert_eq!(trace.records[0].kappa, vec![6.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn cycle_stays_symmetric() {
    let g = cycle(5);
    let trace = run_relaxation(&g, &SraConfig::default()).unwrap();
    assert_eq!(trace.status, RunStatus::Converged);
    for r in &trace.records {
        assert!(r.normalized.iter().all(|&x| x == 1.0));
        assert!(r.s.windows(2).all(|w| w[0] == w[1]));
    }
    let last = trace.final_costs();
    assert!(last.as_slice().windows(2).all(|w| w[0] == w[1]));
    let before = mean_route_hops(&g, &CostVector::uniform(5)).unwrap();
    let after = mean_route_hops(&g, &last).unwrap();
    assert_eq!(before, after);
}

#[test]
fn wheel_hub_sheds_load_through_a_switch() {
    let g = wheel(7);
    let trace = run_relaxation(&g, &SraConfig::default()).unwrap();
    assert!(trace.switch_count() >= 1);
    let initial = betweenness(&g, &CostVector::uniform(8)).unwrap().peak();
    let last = betweenness(&g, &trace.final_costs()).unwrap().peak();
    assert!(last < initial, "peak {initial} -> {last}");
}

#[test]
fn step_arithmetic_examples() {
    let c = cfg(0.1, 10.0, 10, 1);
    let next = relax_step(&SraState::initial(2), &[1.0, 0.0], &c).unwrap();
    assert!((next.s[0] - 0.1).abs() < 1e-15 && next.s[1] == 0.0);
    assert!((next.c[0] - 2.0).abs() < 1e-12 && next.c[1] == 1.0);

    let state = SraState {
        s: vec![0.5, 0.5],
        c: CostVector::uniform(2),
        k: 0,
        dwell_remaining: 0,
    };
    let next = relax_step(&state, &[0.0, 1.0], &cfg(0.5, 10.0, 10, 1)).unwrap();
    assert_eq!(next.s, vec![0.25, 0.75]);
}

#[test]
fn trace_csv_round_trips_full_vectors() {
    let g = wheel(6);
    let trace = run_relaxation(&g, &cfg(0.2, 5.0, 30, 2)).unwrap();
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf, true).unwrap();
    let loaded = read_trace_csv(buf.as_slice()).unwrap();
    assert!(loaded.full);
    assert_eq!(loaded.records.len(), trace.records.len());
    for (a, b) in loaded.records.iter().zip(&trace.records) {
        assert_eq!(a.s, b.s);
        assert_eq!(a.c, b.c);
        assert_eq!(a.signature, b.signature);
        assert_eq!(a.switched, b.switched);
    }
}

#[test]
fn default_topologies_keep_pressure_in_unit_box() {
    for (i, spec) in [
        TopologySpec::ba(60, 3, 1),
        TopologySpec::ws(60, 6, 0.1, 2),
        TopologySpec::er(60, 0.1, 3),
    ]
    .iter()
    .enumerate()
    {
        let g = generate(spec).unwrap();
        let trace = run_relaxation(&g, &SraConfig::default()).unwrap();
        for r in &trace.records {
            assert!(
                r.s.iter().all(|s| (0.0..=1.0).contains(s)),
                "topology {i} k {}",
                r.k
            );
        }
        assert!(trace.records.len() <= SraConfig::default().k_max + 1);
    }
}

fn small_graph() -> impl Strategy<Value = Graph> {
    (5usize..=12).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(any::<usize>(), n - 1),
            prop::collection::vec(prop::bool::weighted(0.25), n * (n - 1) / 2),
        )
            .prop_map(|(n, parents, extra)| connected_graph(n, &parents, &extra))
    })
}

fn controller_cfg() -> impl Strategy<Value = SraConfig> {
    (0.05f64..0.95, 0.5f64..20.0, 1usize..6)
        .prop_map(|(alpha, beta_i, t_d)| cfg(alpha, beta_i, 60, t_d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_invariants(g in small_graph(), c in controller_cfg()) {
        let trace = run_relaxation(&g, &c).unwrap();
        prop_assert!(trace.records.len() <= c.k_max + 1);
        for r in &trace.records {
            for (i, &s) in r.s.iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(&s));
                // Same expression as the controller, so equality is exact.
                prop_assert_eq!(r.c[i], 1.0 + c.beta_i * s);
            }
        }
        let switches: Vec<usize> =
            trace.records.iter().filter(|r| r.switched).map(|r| r.k).collect();
        for w in switches.windows(2) {
            prop_assert!(w[1] - w[0] >= c.t_d, "switches at {} and {}", w[0], w[1]);
        }
        for w in trace.records.windows(2) {
            if w[0].signature == w[1].signature && !w[1].switched {
                prop_assert_eq!(&w[0].normalized, &w[1].normalized);
            }
        }
    }

    #[test]
    fn runs_are_deterministic(g in small_graph(), c in controller_cfg()) {
        let a = run_relaxation(&g, &c).unwrap();
        let b = run_relaxation(&g, &c).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn integrator_contracts_towards_its_target(g in small_graph(), c in controller_cfg()) {
        let trace = run_relaxation(&g, &c).unwrap();
        for w in trace.records.windows(2) {
            let before = dist(&w[0].s, &w[0].normalized);
            let after = dist(&w[1].s, &w[0].normalized);
            if before > 1e-12 {
                prop_assert!((after - (1.0 - c.alpha) * before).abs() <= 1e-12 * before.max(1.0));
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}
