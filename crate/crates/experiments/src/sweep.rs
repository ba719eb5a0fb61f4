//! Policy comparison across offered loads.

use rayon::prelude::*;
use serde::Serialize;

use sra_core::generate;
use sra_netsim::protocols::converged_state;
use sra_netsim::{make_policy, simulate, PolicyKind, PolicyParams, SimOutcome};

use crate::spec::ExperimentSpec;
use crate::stats::mean_sd;
use crate::ExperimentError;

/// Loss rate above which a load counts as past the congestion knee.
pub const KNEE_LOSS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub topology: String,
    pub trial: usize,
    pub seed: u64,
    pub policy: String,
    pub load: f64,
    pub throughput: f64,
    pub loss_rate: f64,
    pub mean_latency: f64,
    pub pdr: f64,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub unreachable: u64,
    pub in_flight: u64,
    pub conserved: bool,
}

impl RunRow {
    pub fn new(
        topology: &str,
        trial: usize,
        seed: u64,
        policy: PolicyKind,
        load: f64,
        out: &SimOutcome,
    ) -> Self {
        let m = &out.metrics;
        let c = &out.totals;
        RunRow {
            topology: topology.to_string(),
            trial,
            seed,
            policy: policy.to_string(),
            load,
            throughput: m.throughput,
            loss_rate: m.loss_rate,
            mean_latency: m.mean_latency,
            pdr: m.pdr,
            generated: c.generated,
            delivered: c.delivered,
            dropped: c.dropped,
            unreachable: c.unreachable,
            in_flight: c.in_flight,
            conserved: c.is_conserved() && m.counts.is_conserved(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub topology: String,
    pub policy: String,
    pub load: f64,
    pub trials: usize,
    pub throughput_mean: f64,
    pub throughput_sd: f64,
    pub loss_mean: f64,
    pub loss_sd: f64,
    pub latency_mean: f64,
    pub latency_sd: f64,
    pub pdr_mean: f64,
    pub pdr_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KneeRow {
    pub topology: String,
    pub policy: String,
    /// First load whose mean loss exceeds [`KNEE_LOSS`]; empty if none.
    pub knee_load: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub runs: Vec<RunRow>,
    pub cells: Vec<SweepCell>,
    pub knees: Vec<KneeRow>,
}

impl SweepResult {
    pub fn cell(&self, topology: &str, policy: PolicyKind, load: f64) -> Option<&SweepCell> {
        let policy = policy.to_string();
        self.cells
            .iter()
            .find(|c| c.topology == topology && c.policy == policy && c.load == load)
    }
}

fn run_trial(
    spec: &ExperimentSpec,
    kinds: &[PolicyKind],
    topology: usize,
    trial: usize,
) -> Result<Vec<RunRow>, ExperimentError> {
    let cfg = &spec.topologies[topology];
    let seed = spec.trial_seed(trial);
    let g = generate(&cfg.to_spec(seed)?)?;
    let sra_initial = if kinds.contains(&PolicyKind::Sra) {
        Some(converged_state(&g, &spec.sra_config())?)
    } else {
        None
    };
    let params = PolicyParams {
        sra: spec.sra_config(),
        sra_initial,
        queue_capacity: spec.traffic.queue_capacity,
        seed,
        ..PolicyParams::default()
    };
    let mut rows = Vec::with_capacity(kinds.len() * spec.loads.len());
    for &kind in kinds {
        for &load in &spec.loads {
            let mut policy = make_policy(kind, &g, &params)?;
            let out = simulate(&g, policy.as_mut(), &spec.traffic.config(load, seed))?;
            rows.push(RunRow::new(&cfg.model, trial, seed, kind, load, &out));
        }
    }
    Ok(rows)
}

/// Aggregates per-trial rows into mean and deviation per
/// `(topology, policy, load)`, keeping first-seen order.
pub fn aggregate(runs: &[RunRow]) -> Vec<SweepCell> {
    let mut keys: Vec<(String, String, f64)> = Vec::new();
    for r in runs {
        let key = (r.topology.clone(), r.policy.clone(), r.load);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(topology, policy, load)| {
            let group: Vec<&RunRow> = runs
                .iter()
                .filter(|r| r.topology == topology && r.policy == policy && r.load == load)
                .collect();
            let stat =
                |f: fn(&RunRow) -> f64| mean_sd(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (throughput_mean, throughput_sd) = stat(|r| r.throughput);
            let (loss_mean, loss_sd) = stat(|r| r.loss_rate);
            let (latency_mean, latency_sd) = stat(|r| r.mean_latency);
            let (pdr_mean, pdr_sd) = stat(|r| r.pdr);
            SweepCell {
                topology,
                policy,
                load,
                trials: group.len(),
                throughput_mean,
                throughput_sd,
                loss_mean,
                loss_sd,
                latency_mean,
                latency_sd,
                pdr_mean,
                pdr_sd,
            }
        })
        .collect()
}

fn knees(cells: &[SweepCell]) -> Vec<KneeRow> {
    let mut out: Vec<KneeRow> = Vec::new();
    for c in cells {
        if out
            .iter()
            .any(|k| k.topology == c.topology && k.policy == c.policy)
        {
            continue;
        }
        let mut series: Vec<&SweepCell> = cells
            .iter()
            .filter(|d| d.topology == c.topology && d.policy == c.policy)
            .collect();
        series.sort_by(|a, b| a.load.total_cmp(&b.load));
        out.push(KneeRow {
            topology: c.topology.clone(),
            policy: c.policy.clone(),
            knee_load: series
                .iter()
                .find(|d| d.loss_mean > KNEE_LOSS)
                .map(|d| d.load),
        });
    }
    out
}

pub fn load_sweep(spec: &ExperimentSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate()?;
    let kinds = spec.policy_kinds()?;
    let jobs: Vec<(usize, usize)> = (0..spec.topologies.len())
        .flat_map(|t| (0..spec.trials).map(move |i| (t, i)))
        .collect();
    let per_trial = jobs
        .par_iter()
        .map(|&(t, i)| run_trial(spec, &kinds, t, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut runs: Vec<RunRow> = per_trial.into_iter().flatten().collect();
    // Trial-major within each (topology, policy, load) group.
    runs.sort_by(|a, b| {
        let ta = spec.topologies.iter().position(|t| t.model == a.topology);
        let tb = spec.topologies.iter().position(|t| t.model == b.topology);
        ta.cmp(&tb)
            .then_with(|| kinds_pos(&kinds, &a.policy).cmp(&kinds_pos(&kinds, &b.policy)))
            .then_with(|| a.load.total_cmp(&b.load))
            .then_with(|| a.trial.cmp(&b.trial))
    });
    let cells = aggregate(&runs);
    let knees = knees(&cells);
    Ok(SweepResult { runs, cells, knees })
}

fn kinds_pos(kinds: &[PolicyKind], name: &str) -> usize {
    kinds
        .iter()
        .position(|k| k.to_string() == name)
        .unwrap_or(usize::MAX)
}
