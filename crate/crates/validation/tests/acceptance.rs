//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so every line is shown.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use sra_core::controller::{RelaxTrace, RunStatus, SraConfig};
use sra_core::stability::{
    contraction_ratios, design_dwell_time, switch_bound, switch_census, verify_drop_jump,
};
use sra_core::{
    betweenness, generate, run_relaxation, seeded_rng, CostVector, Graph, Model, TopologySpec,
};
use sra_experiments::attack::attack_experiment;
use sra_experiments::capacity::capacity_validation;
use sra_experiments::run_to_dir;
use sra_experiments::spec::{ExperimentSpec, Family, TopologyConfig};
use sra_experiments::structural::structural_experiment;
use sra_experiments::sweep::load_sweep;
use sra_netsim::PolicyKind;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// 1. Brandes against exhaustive enumeration on 200 random small graphs.
fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = seeded_rng(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(3..=9);
        let parents: Vec<usize> = (1..n).map(|_| rng.random_range(0..n)).collect();
        let extra: Vec<bool> = (0..n * (n - 1) / 2).map(|_| rng.random_bool(0.3)).collect();
        let g = oracle::connected_graph(n, &parents, &extra);
        let costs: Vec<f64> = match rng.random_range(0..3) {
            0 => vec![1.0; n],
            1 => (0..n).map(|_| f64::from(rng.random_range(1..=3))).collect(),
            _ => (0..n).map(|_| rng.random_range(1.0..11.0)).collect(),
        };
        let c = CostVector::new(costs).unwrap();
        let got = betweenness(&g, &c).unwrap().kappa;
        let want = oracle::brute_force_betweenness(&g, &c);
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-9 && elapsed < Duration::from_secs(60),
        format!(
            "max |error| {worst:.2e} over 200 graphs in {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn small_topologies() -> Vec<TopologySpec> {
    (0..10)
        .flat_map(|seed| {
            [
                TopologySpec::ba(30, 3, seed),
                TopologySpec::ws(30, 4, 0.1, seed),
                TopologySpec::er(30, 0.15, seed),
            ]
        })
        .collect()
}

fn relax_all(t_d: usize) -> Vec<RelaxTrace> {
    small_topologies()
        .iter()
        .map(|spec| {
            let g = generate(spec).unwrap();
            run_relaxation(
                &g,
                &SraConfig {
                    alpha: 0.1,
                    t_d,
                    ..SraConfig::default()
                },
            )
            .unwrap()
        })
        .collect()
}

// 2. Per-step drop-jump inequality and fixed-signature contraction.
fn drop_jump() -> Verdict {
    let mut steps = 0;
    let mut violations = 0;
    let mut ratios = 0;
    let mut worst_ratio: f64 = 0.0;
    // Unit dwell switches almost every step, so a longer dwell supplies the
    // fixed-signature stretches for the contraction check.
    for trace in relax_all(1).into_iter().chain(relax_all(3)) {
        let report = verify_drop_jump(&trace.records, 0.1).unwrap();
        steps += report.records.len();
        violations += report.violations();
        for (_, r) in contraction_ratios(&trace.records, 1e-20) {
            ratios += 1;
            worst_ratio = worst_ratio.max((r - 0.81).abs());
        }
    }
    verdict(
        violations == 0 && ratios > 0 && worst_ratio <= 1e-10,
        format!(
            "{violations} violations in {steps} steps; {ratios} fixed-signature ratios, max |ratio - 0.81| {worst_ratio:.2e}"
        ),
    )
}

// 3. Switch census within 1 + floor(T / t_d) for every window.
fn switch_bounds() -> Verdict {
    let mut violations = 0;
    let mut checked = 0;
    let mut max_switches = 0;
    for t_d in [1, 3, 5, 10] {
        for trace in relax_all(t_d) {
            max_switches = max_switches.max(trace.switch_count());
            for window in 1..=trace.records.len() {
                checked += 1;
                if switch_census(&trace.records, window) > switch_bound(window, t_d) {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations over {checked} (run, window) checks; max switches per run {max_switches}"),
    )
}

// 4. Dwell-time design.
fn dwell_design() -> Verdict {
    // C / R^2 = 0.5 with alpha = 0.1: delta_bar^2 / alpha = 0.5.
    let t_d = design_dwell_time(0.05f64.sqrt(), 0.1, 1.0);
    let infeasible = design_dwell_time(1.0, 0.1, 1.0);
    verdict(
        matches!(t_d, Ok(7)) && infeasible.is_err(),
        format!(
            "design_dwell_time = {t_d:?}; infeasible case -> {}",
            if infeasible.is_err() {
                "error"
            } else {
                "accepted"
            }
        ),
    )
}

// 5. Structural benefits at n = 100 over 20 seeds.
fn structural() -> Verdict {
    let start = Instant::now();
    let spec = ExperimentSpec {
        trials: 20,
        ..ExperimentSpec::defaults(Family::Structural)
    };
    let out = structural_experiment(&spec).unwrap();
    let change = |t: &str, m: &str| out.row(t, m).unwrap().percent_change;
    let ba_peak = -change("ba", "peak_centrality");
    let ba_std = -change("ba", "std_centrality");
    let ba_hops = change("ba", "avg_path_length");
    let er_peak = -change("er", "peak_centrality");
    let er_hops = change("er", "avg_path_length");
    let ws_peak = -change("ws", "peak_centrality");
    let elapsed = start.elapsed();
    let pass = ba_peak >= 70.0
        && ba_std >= 60.0
        && ba_hops <= 10.0
        && er_peak >= 50.0
        && er_hops <= 2.0
        && ws_peak >= 35.0
        && elapsed < Duration::from_secs(30 * 60);
    let shaved = out
        .trials
        .iter()
        .filter(|t| t.final_peak <= t.initial_peak)
        .count();
    verdict(
        pass,
        format!(
            "BA peak -{ba_peak:.2}% std -{ba_std:.2}% hops {ba_hops:+.2}%; ER peak -{er_peak:.2}% hops {er_hops:+.2}%; WS peak -{ws_peak:.2}%; {shaved}/{} trials shaved; {:.1}s",
            out.trials.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// 6. Predicted against measured capacity gain.
fn capacity() -> Verdict {
    let start = Instant::now();
    let spec = ExperimentSpec {
        trials: 30,
        ..ExperimentSpec::defaults(Family::CapacityValidation)
    };
    let out = capacity_validation(&spec).unwrap();
    let min_x = out
        .samples
        .iter()
        .map(|s| s.x)
        .fold(f64::INFINITY, f64::min);
    let min_y = out
        .samples
        .iter()
        .map(|s| s.y)
        .fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    let x_route: Vec<f64> = out.samples.iter().map(|s| s.x_route).collect();
    let y: Vec<f64> = out.samples.iter().map(|s| s.y).collect();
    let route_fit = sra_experiments::stats::r_squared_identity(&x_route, &y);
    verdict(
        out.r_squared >= 0.8 && min_x >= 1.0 && elapsed < Duration::from_secs(30 * 60),
        format!(
            "R^2 {:.3} over {} samples ({} skipped); min x {min_x:.3}, min y {min_y:.3}; route-load ratio R^2 {route_fit:.3}; {:.1}s",
            out.r_squared,
            out.samples.len(),
            out.skipped.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn sweep_spec() -> ExperimentSpec {
    ExperimentSpec {
        topologies: vec![
            TopologyConfig::new(Model::Ba, 60),
            TopologyConfig::new(Model::Er, 60),
        ],
        trials: 10,
        policies: vec!["sra".into(), "dijkstra".into()],
        loads: vec![1.5],
        ..ExperimentSpec::defaults(Family::LoadSweep)
    }
}

// 7. Loss ordering at load 1.5.
fn load_ordering() -> Verdict {
    let out = load_sweep(&sweep_spec()).unwrap();
    let cell = |t, p| out.cell(t, p, 1.5).unwrap();
    let (ba_s, ba_d) = (
        cell("ba", PolicyKind::Sra),
        cell("ba", PolicyKind::Dijkstra),
    );
    let (er_s, er_d) = (
        cell("er", PolicyKind::Sra),
        cell("er", PolicyKind::Dijkstra),
    );
    let gap = (ba_d.loss_mean - ba_s.loss_mean) * 100.0;
    verdict(
        gap >= 15.0 && er_s.loss_mean < er_d.loss_mean && er_s.latency_mean >= er_d.latency_mean,
        format!(
            "BA loss sra {:.1}% vs dijkstra {:.1}% (gap {gap:.1} pp); ER loss sra {:.1}% vs {:.1}%, latency {:.1} vs {:.1}",
            ba_s.loss_mean * 100.0,
            ba_d.loss_mean * 100.0,
            er_s.loss_mean * 100.0,
            er_d.loss_mean * 100.0,
            er_s.latency_mean,
            er_d.latency_mean
        ),
    )
}

// 8. Delivery advantage under targeted removal.
fn attack() -> Verdict {
    let spec = ExperimentSpec {
        topologies: vec![
            TopologyConfig::new(Model::Er, 60),
            TopologyConfig::new(Model::Ba, 60),
        ],
        trials: 10,
        ..ExperimentSpec::defaults(Family::Attack)
    };
    let out = attack_experiment(&spec).unwrap();
    let er: Vec<f64> = spec
        .removal_fractions
        .iter()
        .map(|&f| out.row("er", f).unwrap().advantage_mean)
        .collect();
    let ba: Vec<(f64, f64)> = spec
        .removal_fractions
        .iter()
        .map(|&f| (f, out.row("ba", f).unwrap().advantage_mean))
        .collect();
    let er_neutral = er.iter().all(|a| a.abs() <= 5.0);
    let ba_positive = ba
        .iter()
        .filter(|(f, _)| *f >= 0.1 - 1e-12)
        .all(|(_, a)| *a > 0.0);
    let ba_20 = ba
        .iter()
        .find(|(f, _)| (f - 0.2).abs() < 1e-12)
        .map(|(_, a)| *a)
        .unwrap();
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|a| format!("{a:+.1}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    verdict(
        er_neutral && ba_positive && ba_20 >= 20.0,
        format!(
            "ER advantage by step [{}]; BA [{}]; BA at 20% {ba_20:+.1}",
            fmt(&er),
            fmt(&ba.iter().map(|(_, a)| *a).collect::<Vec<_>>())
        ),
    )
}

// 9. Packet conservation and byte-identical reruns.
fn conservation_and_determinism() -> Verdict {
    let spec = ExperimentSpec {
        topologies: vec![
            TopologyConfig::new(Model::Ba, 40),
            TopologyConfig::new(Model::Ws, 40),
        ],
        trials: 3,
        loads: vec![0.0, 0.5, 1.0, 2.0],
        ..ExperimentSpec::defaults(Family::LoadSweep)
    };
    let runs = load_sweep(&spec).unwrap().runs;
    let broken = runs.iter().filter(|r| !r.conserved).count();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files_a = run_to_dir(&spec, a.path()).unwrap();
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let files_b = serial.install(|| run_to_dir(&spec, b.path())).unwrap();
    let mut differing = Vec::new();
    for (fa, fb) in files_a.iter().zip(&files_b) {
        if fs::read(fa).unwrap() != fs::read(fb).unwrap() {
            differing.push(fa.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    verdict(
        broken == 0 && differing.is_empty() && files_a.len() == files_b.len(),
        format!(
            "{broken} of {} runs break conservation; {} files compared across thread counts, differing: {differing:?}",
            runs.len(),
            files_a.len()
        ),
    )
}

// 10. Convergence at the default settings.
fn convergence() -> Verdict {
    let mut converged = 0;
    let mut out_of_box = 0;
    let mut total = 0;
    for seed in 0..10 {
        for model in [Model::Ba, Model::Ws, Model::Er] {
            let g: Graph = generate(&TopologySpec::new(model, seed)).unwrap();
            let trace = run_relaxation(&g, &SraConfig::default()).unwrap();
            total += 1;
            if trace.status == RunStatus::Converged {
                converged += 1;
            }
            out_of_box += trace
                .records
                .iter()
                .map(|r| r.s.iter().filter(|s| !(0.0..=1.0).contains(*s)).count())
                .sum::<usize>();
        }
    }
    verdict(
        converged * 10 >= total * 9 && out_of_box == 0,
        format!("{converged}/{total} runs converged within 200 iterations; {out_of_box} pressure entries outside [0, 1]"),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("drop-jump inequality", drop_jump),
        ("switch bound", switch_bounds),
        ("dwell design", dwell_design),
        ("structural benefits", structural),
        ("capacity validation", capacity),
        ("load-sweep ordering", load_ordering),
        ("attack neutrality and advantage", attack),
        ("conservation and determinism", conservation_and_determinism),
        ("convergence", convergence),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("criterion {:02}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| id.contains(f.as_str()) || name.contains(f.as_str()))
        {
            continue;
        }
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{id} [{name}]: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
