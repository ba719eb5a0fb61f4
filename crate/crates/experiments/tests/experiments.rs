//! Experiment families on small specs with known answers.

use sra_core::{run_relaxation, CostVector, Graph, Model, SraConfig};
use sra_experiments::attack::attack_experiment;
use sra_experiments::capacity::capacity_validation;
use sra_experiments::sensitivity::sensitivity_experiment;
use sra_experiments::spec::{ExperimentSpec, Family, TopologyConfig, TrafficSettings};
use sra_experiments::structural::{structural_experiment, StructuralMetrics};
use sra_experiments::sweep::load_sweep;
use sra_netsim::PolicyKind;

fn short_traffic() -> TrafficSettings {
    TrafficSettings {
        total_timesteps: 500,
        warmup: 100,
        ..TrafficSettings::default()
    }
}

fn tree(n: usize) -> TopologyConfig {
    TopologyConfig {
        ba_m: 1,
        ..TopologyConfig::new(Model::Ba, n)
    }
}

#[test]
fn star_metrics_do_not_move() {
    let g = Graph::from_edges(7, (1..7).map(|v| (0, v))).unwrap();
    let before = StructuralMetrics::measure(&g, &CostVector::uniform(7)).unwrap();
    let trace = run_relaxation(&g, &SraConfig::default()).unwrap();
    let after = StructuralMetrics::measure(&g, &trace.final_costs()).unwrap();
    assert_eq!(before, after);
}

#[test]
fn structural_rows_summarise_trials() {
    let spec = ExperimentSpec {
        topologies: vec![
            TopologyConfig::new(Model::Ba, 40),
            TopologyConfig::new(Model::Ws, 30),
        ],
        trials: 3,
        ..ExperimentSpec::defaults(Family::Structural)
    };
    let out = structural_experiment(&spec).unwrap();
    assert_eq!(out.trials.len(), 6);
    assert_eq!(out.rows.len(), 6);
    for t in &out.trials {
        assert!(
            t.final_peak <= t.initial_peak,
            "trial {} of {}",
            t.trial,
            t.topology
        );
    }
    let peak = out.row("ba", "peak_centrality").unwrap();
    assert!(peak.percent_change < 0.0);
    let expected = (peak.final_mean - peak.initial_mean) / peak.initial_mean * 100.0;
    assert!((peak.percent_change - expected).abs() < 1e-12);
}

#[test]
fn unique_path_capacity_samples_sit_on_the_identity() {
    let spec = ExperimentSpec {
        topologies: vec![tree(30)],
        trials: 2,
        critical_seeds: 2,
        traffic: short_traffic(),
        ..ExperimentSpec::defaults(Family::CapacityValidation)
    };
    let out = capacity_validation(&spec).unwrap();
    assert_eq!(out.samples.len(), 2);
    for s in &out.samples {
        assert_eq!((s.x, s.y, s.x_route), (1.0, 1.0, 1.0));
    }
    assert_eq!(out.r_squared, 1.0);
}

#[test]
fn zero_load_rows_are_empty() {
    let spec = ExperimentSpec {
        topologies: vec![TopologyConfig::new(Model::Er, 25)],
        trials: 2,
        loads: vec![0.0, 0.6],
        traffic: short_traffic(),
        ..ExperimentSpec::defaults(Family::LoadSweep)
    };
    let out = load_sweep(&spec).unwrap();
    assert_eq!(out.runs.len(), 2 * 2 * PolicyKind::ALL.len());
    for kind in PolicyKind::ALL {
        let cell = out.cell("er", kind, 0.0).unwrap();
        assert_eq!((cell.throughput_mean, cell.loss_mean), (0.0, 0.0));
        assert_eq!(cell.trials, 2);
    }
    assert!(out.runs.iter().all(|r| r.conserved));
}

#[test]
fn identical_routing_has_no_attack_advantage() {
    let spec = ExperimentSpec {
        topologies: vec![tree(30)],
        trials: 2,
        removal_fractions: vec![0.0],
        traffic: short_traffic(),
        ..ExperimentSpec::defaults(Family::Attack)
    };
    let out = attack_experiment(&spec).unwrap();
    let row = out.row("ba", 0.0).unwrap();
    assert_eq!(row.advantage_mean, 0.0);
    assert_eq!(row.pdr_sra_mean, row.pdr_dijkstra_mean);
}

#[test]
fn attack_removes_the_requested_share() {
    let spec = ExperimentSpec {
        topologies: vec![TopologyConfig::new(Model::Ba, 40)],
        trials: 1,
        removal_fractions: vec![0.0, 0.1, 0.25],
        traffic: short_traffic(),
        ..ExperimentSpec::defaults(Family::Attack)
    };
    let out = attack_experiment(&spec).unwrap();
    let removed: Vec<usize> = out.runs.iter().map(|r| r.removed).collect();
    assert_eq!(removed, vec![0, 4, 10]);
}

#[test]
fn sensitivity_grid_edges() {
    let spec = ExperimentSpec {
        topologies: vec![TopologyConfig::new(Model::Ba, 30)],
        trials: 2,
        alphas: vec![0.1, 0.99],
        betas: vec![0.0, 10.0],
        traffic: short_traffic(),
        ..ExperimentSpec::defaults(Family::Sensitivity)
    };
    let out = sensitivity_experiment(&spec).unwrap();
    for alpha in [0.1, 0.99] {
        let flat = out.row(alpha, 0.0).unwrap();
        assert_eq!(flat.peak_change_mean, 0.0);
        assert_eq!(flat.hops_change_mean, 0.0);
        assert_eq!(
            (flat.loss_delta, flat.latency_delta, flat.throughput_delta),
            (0.0, 0.0, 0.0)
        );
    }
    let calm = out.row(0.1, 10.0).unwrap();
    let jumpy = out.row(0.99, 10.0).unwrap();
    assert!(jumpy.switches_mean >= calm.switches_mean);
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = ExperimentSpec::defaults(Family::LoadSweep);
    spec.trials = 0;
    assert!(spec.validate().is_err());
    let mut spec = ExperimentSpec::defaults(Family::Sensitivity);
    spec.alphas.clear();
    assert!(spec.validate().is_err());
    let mut spec = ExperimentSpec::defaults(Family::LoadSweep);
    spec.policies = vec!["ospf".into()];
    assert!(spec.validate().is_err());
    let spec = ExperimentSpec::defaults(Family::Attack);
    let json = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<ExperimentSpec>(&json).unwrap(), spec);
}
