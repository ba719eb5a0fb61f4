//! Targeted removal of high-centrality nodes and the resulting delivery
//! advantage of the relaxation controller over static shortest paths.

use rayon::prelude::*;
use serde::Serialize;

use sra_core::routing::betweenness;
use sra_core::{generate, CostVector, Graph};
use sra_netsim::protocols::converged_state;
use sra_netsim::{make_policy, simulate, PolicyKind, PolicyParams};

use crate::spec::ExperimentSpec;
use crate::stats::mean_sd;
use crate::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackRun {
    pub topology: String,
    pub trial: usize,
    pub seed: u64,
    pub fraction: f64,
    pub removed: usize,
    pub components: usize,
    pub pdr_dijkstra: f64,
    pub pdr_sra: f64,
    pub advantage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackRow {
    pub topology: String,
    pub fraction: f64,
    pub removed: usize,
    pub trials: usize,
    pub advantage_mean: f64,
    pub advantage_sd: f64,
    pub pdr_dijkstra_mean: f64,
    pub pdr_sra_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub runs: Vec<AttackRun>,
    pub rows: Vec<AttackRow>,
}

impl AttackResult {
    pub fn row(&self, topology: &str, fraction: f64) -> Option<&AttackRow> {
        self.rows
            .iter()
            .find(|r| r.topology == topology && r.fraction == fraction)
    }
}

/// Relative delivery-rate gain in percent.
pub fn pdr_advantage(pdr_sra: f64, pdr_dijkstra: f64) -> f64 {
    if pdr_dijkstra == 0.0 {
        return if pdr_sra == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (pdr_sra - pdr_dijkstra) / pdr_dijkstra * 100.0
}

/// Nodes by descending uniform-cost centrality, ties by lower id.
pub fn removal_order(g: &Graph) -> Result<Vec<usize>, ExperimentError> {
    let kappa = betweenness(g, &CostVector::uniform(g.node_count()))?.kappa;
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.sort_by(|&a, &b| kappa[b].total_cmp(&kappa[a]).then(a.cmp(&b)));
    Ok(order)
}

pub fn removal_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).min(n.saturating_sub(2))
}

fn run_trial(
    spec: &ExperimentSpec,
    topology: usize,
    trial: usize,
) -> Result<Vec<AttackRun>, ExperimentError> {
    let cfg = &spec.topologies[topology];
    let seed = spec.trial_seed(trial);
    let g = generate(&cfg.to_spec(seed)?)?;
    let order = removal_order(&g)?;
    let traffic = spec.traffic.config(spec.attack_load, seed);
    let mut runs = Vec::with_capacity(spec.removal_fractions.len());
    for &fraction in &spec.removal_fractions {
        let removed = removal_count(fraction, g.node_count());
        let (damaged, _) = g.without_nodes(&order[..removed]);
        let params = PolicyParams {
            sra: spec.sra_config(),
            sra_initial: Some(converged_state(&damaged, &spec.sra_config())?),
            queue_capacity: spec.traffic.queue_capacity,
            seed,
            ..PolicyParams::default()
        };
        let pdr = |kind| -> Result<f64, ExperimentError> {
            let mut policy = make_policy(kind, &damaged, &params)?;
            Ok(simulate(&damaged, policy.as_mut(), &traffic)?.metrics.pdr)
        };
        let pdr_dijkstra = pdr(PolicyKind::Dijkstra)?;
        let pdr_sra = pdr(PolicyKind::Sra)?;
        runs.push(AttackRun {
            topology: cfg.model.clone(),
            trial,
            seed,
            fraction,
            removed,
            components: damaged.component_count(),
            pdr_dijkstra,
            pdr_sra,
            advantage: pdr_advantage(pdr_sra, pdr_dijkstra),
        });
    }
    Ok(runs)
}

pub fn attack_experiment(spec: &ExperimentSpec) -> Result<AttackResult, ExperimentError> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.topologies.len())
        .flat_map(|t| (0..spec.trials).map(move |i| (t, i)))
        .collect();
    let per_trial = jobs
        .par_iter()
        .map(|&(t, i)| run_trial(spec, t, i))
        .collect::<Result<Vec<_>, _>>()?;
    let runs: Vec<AttackRun> = per_trial.into_iter().flatten().collect();
    let mut rows = Vec::new();
    for cfg in &spec.topologies {
        for &fraction in &spec.removal_fractions {
            let group: Vec<&AttackRun> = runs
                .iter()
                .filter(|r| r.topology == cfg.model && r.fraction == fraction)
                .collect();
            let (advantage_mean, advantage_sd) =
                mean_sd(&group.iter().map(|r| r.advantage).collect::<Vec<_>>());
            let mean = |f: fn(&AttackRun) -> f64| {
                mean_sd(&group.iter().map(|r| f(r)).collect::<Vec<_>>()).0
            };
            rows.push(AttackRow {
                topology: cfg.model.clone(),
                fraction,
                removed: removal_count(fraction, cfg.n),
                trials: group.len(),
                advantage_mean,
                advantage_sd,
                pdr_dijkstra_mean: mean(|r| r.pdr_dijkstra),
                pdr_sra_mean: mean(|r| r.pdr_sra),
            });
        }
    }
    Ok(AttackResult { runs, rows })
}
