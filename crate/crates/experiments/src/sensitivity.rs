//! Grid over the integrator gain and the pressure-to-cost factor.

use rayon::prelude::*;
use serde::Serialize;

use sra_core::controller::{RunStatus, SraConfig, SraState};
use sra_core::{generate, run_relaxation, CostVector};
use sra_netsim::{make_policy, simulate, PolicyKind, PolicyParams, TrafficMetrics};

use crate::spec::ExperimentSpec;
use crate::stats::{mean_sd, percent_change};
use crate::structural::StructuralMetrics;
use crate::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRun {
    pub alpha: f64,
    pub beta_i: f64,
    pub trial: usize,
    pub seed: u64,
    pub converged: bool,
    pub switches: usize,
    pub peak_change: f64,
    pub hops_change: f64,
    pub sra_loss: f64,
    pub sra_latency: f64,
    pub sra_throughput: f64,
    pub sra_pdr: f64,
    pub dijkstra_loss: f64,
    pub dijkstra_latency: f64,
    pub dijkstra_throughput: f64,
    pub dijkstra_pdr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub alpha: f64,
    pub beta_i: f64,
    pub trials: usize,
    pub converged_fraction: f64,
    pub switches_mean: f64,
    pub peak_change_mean: f64,
    pub hops_change_mean: f64,
    pub loss_mean: f64,
    pub latency_mean: f64,
    pub throughput_mean: f64,
    pub pdr_mean: f64,
    pub loss_delta: f64,
    pub latency_delta: f64,
    pub throughput_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    pub runs: Vec<SensitivityRun>,
    pub rows: Vec<SensitivityRow>,
}

impl SensitivityResult {
    pub fn row(&self, alpha: f64, beta_i: f64) -> Option<&SensitivityRow> {
        self.rows
            .iter()
            .find(|r| r.alpha == alpha && r.beta_i == beta_i)
    }
}

fn run_trial(spec: &ExperimentSpec, trial: usize) -> Result<Vec<SensitivityRun>, ExperimentError> {
    let cfg = &spec.topologies[0];
    let seed = spec.trial_seed(trial);
    let g = generate(&cfg.to_spec(seed)?)?;
    let traffic = spec.traffic.config(spec.sensitivity_load, seed);
    let before = StructuralMetrics::measure(&g, &CostVector::uniform(g.node_count()))?;
    let run = |kind, params: &PolicyParams| -> Result<TrafficMetrics, ExperimentError> {
        let mut policy = make_policy(kind, &g, params)?;
        Ok(simulate(&g, policy.as_mut(), &traffic)?.metrics)
    };
    let base_params = PolicyParams {
        queue_capacity: spec.traffic.queue_capacity,
        seed,
        ..PolicyParams::default()
    };
    let dijkstra = run(PolicyKind::Dijkstra, &base_params)?;
    let mut runs = Vec::with_capacity(spec.alphas.len() * spec.betas.len());
    for &alpha in &spec.alphas {
        for &beta_i in &spec.betas {
            let sra = SraConfig {
                alpha,
                beta_i,
                ..spec.sra_config()
            };
            let trace = run_relaxation(&g, &sra)?;
            let costs = trace.final_costs();
            let after = StructuralMetrics::measure(&g, &costs)?;
            let last = trace.last();
            let state = SraState {
                s: last.s.clone(),
                c: costs,
                k: last.k,
                dwell_remaining: 0,
            };
            let live = run(
                PolicyKind::Sra,
                &PolicyParams {
                    sra,
                    sra_initial: Some(state),
                    ..base_params.clone()
                },
            )?;
            runs.push(SensitivityRun {
                alpha,
                beta_i,
                trial,
                seed,
                converged: trace.status == RunStatus::Converged,
                switches: trace.switch_count(),
                peak_change: percent_change(before.peak_centrality, after.peak_centrality),
                hops_change: percent_change(before.avg_path_length, after.avg_path_length),
                sra_loss: live.loss_rate,
                sra_latency: live.mean_latency,
                sra_throughput: live.throughput,
                sra_pdr: live.pdr,
                dijkstra_loss: dijkstra.loss_rate,
                dijkstra_latency: dijkstra.mean_latency,
                dijkstra_throughput: dijkstra.throughput,
                dijkstra_pdr: dijkstra.pdr,
            });
        }
    }
    Ok(runs)
}

/// Runs the grid on the first topology of `spec`.
pub fn sensitivity_experiment(spec: &ExperimentSpec) -> Result<SensitivityResult, ExperimentError> {
    spec.validate()?;
    let per_trial = (0..spec.trials)
        .into_par_iter()
        .map(|i| run_trial(spec, i))
        .collect::<Result<Vec<_>, _>>()?;
    let runs: Vec<SensitivityRun> = per_trial.into_iter().flatten().collect();
    let mut rows = Vec::new();
    for &alpha in &spec.alphas {
        for &beta_i in &spec.betas {
            let group: Vec<&SensitivityRun> = runs
                .iter()
                .filter(|r| r.alpha == alpha && r.beta_i == beta_i)
                .collect();
            let mean = |f: fn(&SensitivityRun) -> f64| {
                mean_sd(&group.iter().map(|r| f(r)).collect::<Vec<_>>()).0
            };
            rows.push(SensitivityRow {
                alpha,
                beta_i,
                trials: group.len(),
                converged_fraction: mean(|r| if r.converged { 1.0 } else { 0.0 }),
                switches_mean: mean(|r| r.switches as f64),
                peak_change_mean: mean(|r| r.peak_change),
                hops_change_mean: mean(|r| r.hops_change),
                loss_mean: mean(|r| r.sra_loss),
                latency_mean: mean(|r| r.sra_latency),
                throughput_mean: mean(|r| r.sra_throughput),
                pdr_mean: mean(|r| r.sra_pdr),
                loss_delta: mean(|r| r.sra_loss - r.dijkstra_loss),
                latency_delta: mean(|r| r.sra_latency - r.dijkstra_latency),
                throughput_delta: mean(|r| r.sra_throughput - r.dijkstra_throughput),
            });
        }
    }
    Ok(SensitivityResult { runs, rows })
}
