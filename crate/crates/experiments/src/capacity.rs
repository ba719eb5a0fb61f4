//! Predicted against measured capacity gain.
//!
//! Each sample compares the peak-centrality ratio `x = kappa_max /
//! kappa'_max` with the measured critical-load ratio `y = rho'_crit /
//! rho_crit`, where primed quantities use the relaxation controller's
//! frozen costs and unprimed ones use uniform costs.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use sra_core::routing::{betweenness, RouteTable};
use sra_core::{generate, seeded_rng, CostVector, Graph};
use sra_netsim::protocols::{converged_state, SraMode};
use sra_netsim::{critical_load, make_policy, PolicyKind, PolicyParams};

use crate::spec::ExperimentSpec;
use crate::stats::r_squared_identity;
use crate::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacitySample {
    pub sample: usize,
    pub topology: String,
    pub n: usize,
    pub seed: u64,
    pub kappa_max_uniform: f64,
    pub kappa_max_sra: f64,
    pub x: f64,
    /// Ratio of peak per-node forwarding load under the two route tables.
    pub x_route: f64,
    pub rho_crit_uniform: f64,
    pub rho_crit_sra: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacitySkip {
    pub sample: usize,
    pub topology: String,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub samples: Vec<CapacitySample>,
    pub skipped: Vec<CapacitySkip>,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityFit {
    pub samples: usize,
    pub skipped: usize,
    pub r_squared: f64,
}

impl CapacityResult {
    pub fn fit(&self) -> CapacityFit {
        CapacityFit {
            samples: self.samples.len(),
            skipped: self.skipped.len(),
            r_squared: self.r_squared,
        }
    }
}

/// Packets each node forwards when every ordered pair sends one packet
/// along `table`.
pub fn forwarding_load(table: &RouteTable) -> Vec<usize> {
    let n = table.node_count();
    let mut load = vec![0; n];
    for s in 0..n {
        for d in 0..n {
            if s == d {
                continue;
            }
            if let Some(path) = table.path(s, d) {
                for &v in &path[..path.len() - 1] {
                    load[v] += 1;
                }
            }
        }
    }
    load
}

fn peak_forwarding(g: &Graph, costs: &CostVector) -> Result<f64, ExperimentError> {
    let table = RouteTable::compute(g, costs)?;
    Ok(forwarding_load(&table).into_iter().max().unwrap_or(0) as f64)
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == den {
        1.0
    } else {
        num / den
    }
}

fn run_sample(
    spec: &ExperimentSpec,
    sample: usize,
) -> Result<Result<CapacitySample, CapacitySkip>, ExperimentError> {
    let seed = spec.trial_seed(sample);
    let base = &spec.topologies[sample % spec.topologies.len()];
    let (lo, hi) = spec.n_range;
    let n = seeded_rng(seed).random_range(lo..=hi);
    let cfg = base.with_n(n);
    let g = generate(&cfg.to_spec(seed)?)?;
    let uniform = CostVector::uniform(n);
    let state = converged_state(&g, &spec.sra_config())?;
    let kappa_max_uniform = betweenness(&g, &uniform)?.peak();
    let kappa_max_sra = betweenness(&g, &state.c)?.peak();
    let skip = |reason: String| {
        Ok(Err(CapacitySkip {
            sample,
            topology: cfg.model.clone(),
            seed,
            reason,
        }))
    };
    if kappa_max_sra == 0.0 {
        return skip("no transit load under relaxed costs".into());
    }
    let traffic = spec.traffic.config(0.0, seed);
    let search = spec.critical_search();
    let base_params = PolicyParams {
        sra_mode: SraMode::Static,
        sra_initial: Some(state.clone()),
        queue_capacity: spec.traffic.queue_capacity,
        sra: spec.sra_config(),
        ..PolicyParams::default()
    };
    let find = |kind: PolicyKind| {
        critical_load(
            &g,
            |s| {
                make_policy(
                    kind,
                    &g,
                    &PolicyParams {
                        seed: s,
                        ..base_params.clone()
                    },
                )
            },
            &traffic,
            &search,
        )
    };
    let (Some(rho_crit_uniform), Some(rho_crit_sra)) = (
        find(PolicyKind::Dijkstra)?.critical,
        find(PolicyKind::Sra)?.critical,
    ) else {
        return skip("critical load unbounded".into());
    };
    Ok(Ok(CapacitySample {
        sample,
        topology: cfg.model.clone(),
        n,
        seed,
        kappa_max_uniform,
        kappa_max_sra,
        x: ratio(kappa_max_uniform, kappa_max_sra),
        x_route: ratio(
            peak_forwarding(&g, &uniform)?,
            peak_forwarding(&g, &state.c)?,
        ),
        rho_crit_uniform,
        rho_crit_sra,
        y: ratio(rho_crit_sra, rho_crit_uniform),
    }))
}

/// Runs `spec.trials` samples, cycling through `spec.topologies`.
pub fn capacity_validation(spec: &ExperimentSpec) -> Result<CapacityResult, ExperimentError> {
    spec.validate()?;
    let outcomes = (0..spec.trials)
        .into_par_iter()
        .map(|i| run_sample(spec, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(s) => samples.push(s),
            Err(skip) => skipped.push(skip),
        }
    }
    let x: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.y).collect();
    Ok(CapacityResult {
        r_squared: r_squared_identity(&x, &y),
        samples,
        skipped,
    })
}
