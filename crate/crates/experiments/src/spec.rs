//! Experiment specifications, serialisable so every output directory can
//! carry the fully resolved spec that produced it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use sra_core::controller::SraConfig;
use sra_core::{Model, TopologySpec};
use sra_netsim::{CriticalLoadSearch, PolicyKind, TrafficConfig};

use crate::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Structural,
    CapacityValidation,
    LoadSweep,
    Attack,
    Sensitivity,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Structural => "structural",
            Family::CapacityValidation => "capacity",
            Family::LoadSweep => "sweep",
            Family::Attack => "attack",
            Family::Sensitivity => "sensitivity",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structural" => Ok(Family::Structural),
            "capacity" | "capacity_validation" => Ok(Family::CapacityValidation),
            "sweep" | "load_sweep" => Ok(Family::LoadSweep),
            "attack" => Ok(Family::Attack),
            "sensitivity" => Ok(Family::Sensitivity),
            other => Err(ExperimentError::InvalidSpec(format!(
                "unknown family '{other}'"
            ))),
        }
    }
}

/// Graph family and size; the seed comes from the trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub model: String,
    pub n: usize,
    pub ba_m: usize,
    pub ws_k: usize,
    pub ws_p: f64,
    pub er_p: f64,
}

impl TopologyConfig {
    pub fn new(model: Model, n: usize) -> Self {
        let d = TopologySpec::new(model, 0);
        TopologyConfig {
            model: model.to_string(),
            n,
            ba_m: d.ba_m,
            ws_k: d.ws_k,
            ws_p: d.ws_p,
            er_p: d.er_p,
        }
    }

    pub fn model(&self) -> Result<Model, ExperimentError> {
        self.model
            .parse()
            .map_err(|e| ExperimentError::InvalidSpec(format!("{e}")))
    }

    pub fn with_n(&self, n: usize) -> Self {
        TopologyConfig { n, ..self.clone() }
    }

    pub fn to_spec(&self, seed: u64) -> Result<TopologySpec, ExperimentError> {
        let spec = TopologySpec {
            model: self.model()?,
            n: self.n,
            ba_m: self.ba_m,
            ws_k: self.ws_k,
            ws_p: self.ws_p,
            er_p: self.er_p,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SraSettings {
    pub alpha: f64,
    pub beta_i: f64,
    pub eps: f64,
    pub k_max: usize,
    pub t_d: usize,
}

impl Default for SraSettings {
    fn default() -> Self {
        SraSettings::from(SraConfig::default())
    }
}

impl From<SraConfig> for SraSettings {
    fn from(c: SraConfig) -> Self {
        SraSettings {
            alpha: c.alpha,
            beta_i: c.beta_i,
            eps: c.eps,
            k_max: c.k_max,
            t_d: c.t_d,
        }
    }
}

impl From<SraSettings> for SraConfig {
    fn from(s: SraSettings) -> Self {
        SraConfig {
            alpha: s.alpha,
            beta_i: s.beta_i,
            eps: s.eps,
            k_max: s.k_max,
            t_d: s.t_d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficSettings {
    pub total_timesteps: u64,
    pub warmup: u64,
    pub service_rate: usize,
    pub proc_capacity: usize,
    pub queue_capacity: usize,
    pub update_interval: u64,
}

impl Default for TrafficSettings {
    fn default() -> Self {
        let t = TrafficConfig::default();
        TrafficSettings {
            total_timesteps: t.total_timesteps,
            warmup: t.warmup,
            service_rate: t.service_rate,
            proc_capacity: t.proc_capacity,
            queue_capacity: t.queue_capacity,
            update_interval: t.update_interval,
        }
    }
}

impl TrafficSettings {
    pub fn config(&self, load: f64, seed: u64) -> TrafficConfig {
        TrafficConfig {
            total_timesteps: self.total_timesteps,
            warmup: self.warmup,
            service_rate: self.service_rate,
            proc_capacity: self.proc_capacity,
            queue_capacity: self.queue_capacity,
            load,
            seed,
            update_interval: self.update_interval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    pub topologies: Vec<TopologyConfig>,
    pub trials: usize,
    pub seed_base: u64,
    pub sra: SraSettings,
    pub traffic: TrafficSettings,
    /// Policies compared in load sweeps.
    pub policies: Vec<String>,
    pub loads: Vec<f64>,
    pub removal_fractions: Vec<f64>,
    pub attack_load: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub sensitivity_load: f64,
    pub loss_threshold: f64,
    pub critical_seeds: u64,
    pub critical_resolution: f64,
    /// Inclusive node-count range drawn per capacity sample.
    pub n_range: (usize, usize),
}

impl ExperimentSpec {
    /// Desk-scale defaults for `family`.
    pub fn defaults(family: Family) -> Self {
        let search = CriticalLoadSearch::default();
        let topologies = match family {
            Family::Structural => [Model::Ba, Model::Ws, Model::Er]
                .map(|m| TopologyConfig::new(m, 100))
                .to_vec(),
            Family::CapacityValidation => [Model::Ba, Model::Ws]
                .map(|m| TopologyConfig::new(m, 40))
                .to_vec(),
            Family::LoadSweep | Family::Attack => [Model::Ba, Model::Ws, Model::Er]
                .map(|m| TopologyConfig::new(m, 60))
                .to_vec(),
            Family::Sensitivity => vec![TopologyConfig::new(Model::Ba, 60)],
        };
        ExperimentSpec {
            family,
            topologies,
            trials: 20,
            seed_base: 0,
            sra: SraSettings::default(),
            traffic: TrafficSettings::default(),
            policies: PolicyKind::ALL.iter().map(|p| p.to_string()).collect(),
            loads: (1..=10).map(|i| f64::from(i) * 0.2).collect(),
            removal_fractions: (0..=6).map(|i| f64::from(i) * 0.05).collect(),
            attack_load: 0.8,
            alphas: vec![0.05, 0.1, 0.3, 0.6, 0.99],
            betas: vec![0.0, 1.0, 5.0, 10.0, 20.0],
            sensitivity_load: 1.2,
            loss_threshold: search.loss_threshold,
            critical_seeds: search.seeds,
            critical_resolution: search.resolution,
            n_range: (30, 40),
        }
    }

    pub fn sra_config(&self) -> SraConfig {
        self.sra.into()
    }

    pub fn policy_kinds(&self) -> Result<Vec<PolicyKind>, ExperimentError> {
        self.policies
            .iter()
            .map(|p| {
                p.parse()
                    .map_err(|e| ExperimentError::InvalidSpec(format!("{e}")))
            })
            .collect()
    }

    pub fn critical_search(&self) -> CriticalLoadSearch {
        CriticalLoadSearch {
            loss_threshold: self.loss_threshold,
            seeds: self.critical_seeds,
            resolution: self.critical_resolution,
            ..CriticalLoadSearch::default()
        }
    }

    /// Seed of trial `i`.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed_base.wrapping_add(trial as u64)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidSpec(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be >= 1");
        }
        if self.topologies.is_empty() {
            return bad("at least one topology is required");
        }
        for (i, t) in self.topologies.iter().enumerate() {
            t.to_spec(0)?;
            let repeated = self.topologies[..i].iter().any(|u| u.model == t.model);
            if repeated && self.family != Family::CapacityValidation {
                return bad("topologies are keyed by model; list each model once");
            }
        }
        self.sra_config().validate()?;
        self.traffic.config(0.0, 0).validate()?;
        match self.family {
            Family::Structural => {}
            Family::CapacityValidation => {
                let (lo, hi) = self.n_range;
                if lo < 3 || lo > hi {
                    return bad("n_range must satisfy 3 <= lo <= hi");
                }
                self.critical_search().validate()?;
            }
            Family::LoadSweep => {
                if self.loads.is_empty() || self.policies.is_empty() {
                    return bad("load sweep needs non-empty loads and policies");
                }
                if self.loads.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
                    return bad("loads must be finite and >= 0");
                }
                self.policy_kinds()?;
            }
            Family::Attack => {
                if self.removal_fractions.is_empty() {
                    return bad("attack needs a non-empty removal grid");
                }
                if self
                    .removal_fractions
                    .iter()
                    .any(|f| !(0.0..1.0).contains(f))
                {
                    return bad("removal fractions must lie in [0, 1)");
                }
            }
            Family::Sensitivity => {
                if self.alphas.is_empty() || self.betas.is_empty() {
                    return bad("sensitivity needs non-empty alpha and beta grids");
                }
                for &alpha in &self.alphas {
                    for &beta_i in &self.betas {
                        SraConfig {
                            alpha,
                            beta_i,
                            ..self.sra_config()
                        }
                        .validate()?;
                    }
                }
            }
        }
        Ok(())
    }
}
