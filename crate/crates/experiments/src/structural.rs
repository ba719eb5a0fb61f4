//! Before/after structural comparison of uniform costs against the
//! relaxation controller's final costs.

use rayon::prelude::*;
use serde::Serialize;

use sra_core::controller::RunStatus;
use sra_core::routing::{betweenness, mean_route_hops};
use sra_core::{generate, run_relaxation, CostVector, Graph};

use crate::spec::ExperimentSpec;
use crate::stats::{mean_sd, percent_change, population_sd};
use crate::ExperimentError;

pub const METRICS: [&str; 3] = ["peak_centrality", "std_centrality", "avg_path_length"];

/// Peak and spread of centrality plus mean route length under `costs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructuralMetrics {
    pub peak_centrality: f64,
    pub std_centrality: f64,
    pub avg_path_length: f64,
}

impl StructuralMetrics {
    pub fn measure(g: &Graph, costs: &CostVector) -> Result<Self, ExperimentError> {
        let report = betweenness(g, costs)?;
        Ok(StructuralMetrics {
            peak_centrality: report.peak(),
            std_centrality: population_sd(&report.kappa),
            avg_path_length: mean_route_hops(g, costs)?,
        })
    }

    pub fn get(&self, metric: &str) -> f64 {
        match metric {
            "peak_centrality" => self.peak_centrality,
            "std_centrality" => self.std_centrality,
            "avg_path_length" => self.avg_path_length,
            other => panic!("unknown structural metric '{other}'"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralTrial {
    pub topology: String,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub switches: usize,
    pub initial_peak: f64,
    pub final_peak: f64,
    pub initial_std: f64,
    pub final_std: f64,
    pub initial_hops: f64,
    pub final_hops: f64,
}

impl StructuralTrial {
    fn metrics(&self, initial: bool) -> StructuralMetrics {
        if initial {
            StructuralMetrics {
                peak_centrality: self.initial_peak,
                std_centrality: self.initial_std,
                avg_path_length: self.initial_hops,
            }
        } else {
            StructuralMetrics {
                peak_centrality: self.final_peak,
                std_centrality: self.final_std,
                avg_path_length: self.final_hops,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralRow {
    pub topology: String,
    pub metric: String,
    pub initial_mean: f64,
    pub initial_sd: f64,
    pub final_mean: f64,
    pub final_sd: f64,
    pub percent_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralResult {
    pub trials: Vec<StructuralTrial>,
    pub rows: Vec<StructuralRow>,
}

impl StructuralResult {
    pub fn row(&self, topology: &str, metric: &str) -> Option<&StructuralRow> {
        self.rows
            .iter()
            .find(|r| r.topology == topology && r.metric == metric)
    }
}

fn run_trial(
    spec: &ExperimentSpec,
    topology: usize,
    trial: usize,
) -> Result<StructuralTrial, ExperimentError> {
    let cfg = &spec.topologies[topology];
    let seed = spec.trial_seed(trial);
    let g = generate(&cfg.to_spec(seed)?)?;
    let before = StructuralMetrics::measure(&g, &CostVector::uniform(g.node_count()))?;
    let trace = run_relaxation(&g, &spec.sra_config())?;
    let after = StructuralMetrics::measure(&g, &trace.final_costs())?;
    Ok(StructuralTrial {
        topology: cfg.model.clone(),
        n: cfg.n,
        trial,
        seed,
        converged: trace.status == RunStatus::Converged,
        iterations: trace.iterations(),
        switches: trace.switch_count(),
        initial_peak: before.peak_centrality,
        final_peak: after.peak_centrality,
        initial_std: before.std_centrality,
        final_std: after.std_centrality,
        initial_hops: before.avg_path_length,
        final_hops: after.avg_path_length,
    })
}

pub fn structural_experiment(spec: &ExperimentSpec) -> Result<StructuralResult, ExperimentError> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.topologies.len())
        .flat_map(|t| (0..spec.trials).map(move |i| (t, i)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(t, i)| run_trial(spec, t, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for cfg in &spec.topologies {
        let group: Vec<&StructuralTrial> = trials
            .iter()
            .filter(|t| t.topology == cfg.model && t.n == cfg.n)
            .collect();
        for metric in METRICS {
            let initial: Vec<f64> = group.iter().map(|t| t.metrics(true).get(metric)).collect();
            let last: Vec<f64> = group.iter().map(|t| t.metrics(false).get(metric)).collect();
            let (initial_mean, initial_sd) = mean_sd(&initial);
            let (final_mean, final_sd) = mean_sd(&last);
            rows.push(StructuralRow {
                topology: cfg.model.clone(),
                metric: metric.to_string(),
                initial_mean,
                initial_sd,
                final_mean,
                final_sd,
                percent_change: percent_change(initial_mean, final_mean),
            });
        }
    }
    Ok(StructuralResult { trials, rows })
}
