//! The relaxation controller: a leaky integrator of normalised betweenness
//! driving per-node transit costs.
//!
//! Each iteration evaluates centrality under the current costs, then
//!
//! ```text
//! s' = s + alpha * (norm(kappa) - s)      (== (1 - alpha) s + alpha norm(kappa))
//! c' = 1 + beta_i * s'
//! ```
//!
//! A *switch* is a change of the tied shortest-path signature between
//! consecutive evaluations. With a dwell time `t_d > 1` the path set seen at
//! a switch is reused for the following `t_d - 1` iterations while the
//! pressure keeps integrating.

use std::io::{Read, Write};

use thiserror::Error;

use crate::routing::{betweenness, CentralityReport, CostVector, RoutingError};
use crate::stability::{lyapunov_value, StabilityError};
use crate::topology::Graph;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("invalid controller parameter: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} entries, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("value {value} at node {node} is outside [0, 1]")]
    OutOfRange { node: usize, value: f64 },
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("trace csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace csv: {0}")]
    TraceFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SraConfig {
    /// Integration rate in (0, 1).
    pub alpha: f64,
    /// Pressure-to-cost gain. Zero is accepted and pins every cost at 1.
    pub beta_i: f64,
    /// Stopping threshold on the sup-norm pressure change.
    pub eps: f64,
    pub k_max: usize,
    /// Minimum dwell time after a switch, in iterations.
    pub t_d: usize,
}

impl Default for SraConfig {
    fn default() -> Self {
        SraConfig {
            alpha: 0.1,
            beta_i: 10.0,
            eps: 1e-5,
            k_max: 200,
            t_d: 1,
        }
    }
}

impl SraConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let bad = |m: String| Err(ControllerError::InvalidConfig(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if !(self.beta_i >= 0.0 && self.beta_i.is_finite()) {
            return bad(format!(
                "beta_i must be finite and >= 0, got {}",
                self.beta_i
            ));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be > 0, got {}", self.eps));
        }
        if self.k_max == 0 {
            return bad("k_max must be >= 1".into());
        }
        if self.t_d == 0 {
            return bad("t_d must be >= 1".into());
        }
        Ok(())
    }
}

/// Pressure and cost vectors at iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SraState {
    pub s: Vec<f64>,
    pub c: CostVector,
    pub k: usize,
    pub dwell_remaining: usize,
}

impl SraState {
    /// `S = 0`, `C = 1`.
    pub fn initial(n: usize) -> Self {
        SraState {
            s: vec![0.0; n],
            c: CostVector::uniform(n),
            k: 0,
            dwell_remaining: 0,
        }
    }
}

fn check_unit_interval(v: &[f64]) -> Result<(), ControllerError> {
    match v
        .iter()
        .enumerate()
        .find(|(_, x)| !(0.0..=1.0).contains(*x))
    {
        Some((node, &value)) => Err(ControllerError::OutOfRange { node, value }),
        None => Ok(()),
    }
}

/// One integrator update towards `normalized`.
pub fn relax_step(
    state: &SraState,
    normalized: &[f64],
    cfg: &SraConfig,
) -> Result<SraState, ControllerError> {
    if normalized.len() != state.s.len() {
        return Err(ControllerError::DimensionMismatch {
            expected: state.s.len(),
            actual: normalized.len(),
        });
    }
    check_unit_interval(&state.s)?;
    check_unit_interval(normalized)?;
    let s: Vec<f64> = state
        .s
        .iter()
        .zip(normalized)
        .map(|(&s, &target)| (s + cfg.alpha * (target - s)).clamp(0.0, 1.0))
        .collect();
    let c = CostVector::from_pressure(&s, cfg.beta_i);
    Ok(SraState {
        s,
        c,
        k: state.k + 1,
        dwell_remaining: state.dwell_remaining,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    KMaxReached,
}

/// Snapshot of one controller iteration: the state going in and the
/// centrality it was driven by.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub s: Vec<f64>,
    pub c: Vec<f64>,
    pub kappa: Vec<f64>,
    pub normalized: Vec<f64>,
    pub signature: u64,
    pub switched: bool,
    /// The centrality was reused from a dwell window rather than recomputed.
    pub frozen: bool,
    /// `||s - normalized||^2`.
    pub lyapunov_v: f64,
}

impl IterationRecord {
    pub fn max_s(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_kappa(&self) -> f64 {
        self.kappa.iter().copied().fold(0.0, f64::max)
    }
}

/// Full history of a run. The last record is the terminal state, observed
/// but not integrated further.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxTrace {
    pub records: Vec<IterationRecord>,
    pub status: RunStatus,
    pub config: SraConfig,
}

impl RelaxTrace {
    pub fn first(&self) -> &IterationRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("trace always has a record")
    }

    /// Number of integrator updates performed.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn switch_count(&self) -> usize {
        self.records.iter().filter(|r| r.switched).count()
    }

    pub fn final_costs(&self) -> CostVector {
        CostVector::new(self.last().c.clone()).expect("controller costs are >= 1")
    }
}

struct Observation {
    report: CentralityReport,
    switched: bool,
    frozen: bool,
}

/// Stepwise driver for the controller; [`run_relaxation`] is the batch form.
pub struct Relaxation<'g> {
    graph: &'g Graph,
    cfg: SraConfig,
    state: SraState,
    prev_signature: Option<u64>,
    frozen: Option<CentralityReport>,
}

/// Result of a single [`Relaxation::step`].
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub record: IterationRecord,
    pub converged: bool,
}

impl<'g> Relaxation<'g> {
    pub fn new(graph: &'g Graph, cfg: SraConfig) -> Result<Self, ControllerError> {
        Self::from_state(graph, cfg, SraState::initial(graph.node_count()))
    }

    pub fn from_state(
        graph: &'g Graph,
        cfg: SraConfig,
        state: SraState,
    ) -> Result<Self, ControllerError> {
        cfg.validate()?;
        if state.s.len() != graph.node_count() {
            return Err(ControllerError::DimensionMismatch {
                expected: graph.node_count(),
                actual: state.s.len(),
            });
        }
        Ok(Relaxation {
            graph,
            cfg,
            state,
            prev_signature: None,
            frozen: None,
        })
    }

    pub fn state(&self) -> &SraState {
        &self.state
    }

    fn observe(&mut self) -> Result<Observation, ControllerError> {
        if self.state.dwell_remaining > 0 {
            self.state.dwell_remaining -= 1;
            let report = self
                .frozen
                .clone()
                .expect("dwell window without a frozen path set");
            return Ok(Observation {
                report,
                switched: false,
                frozen: true,
            });
        }
        let report = betweenness(self.graph, &self.state.c)?;
        let switched = self.prev_signature.is_some_and(|p| p != report.signature);
        if switched && self.cfg.t_d > 1 {
            self.frozen = Some(report.clone());
            self.state.dwell_remaining = self.cfg.t_d - 1;
        }
        self.prev_signature = Some(report.signature);
        Ok(Observation {
            report,
            switched,
            frozen: false,
        })
    }

    fn record(&self, obs: &Observation) -> Result<IterationRecord, ControllerError> {
        let lyapunov_v = lyapunov_value(&self.state.s, &obs.report.normalized)?;
        Ok(IterationRecord {
            k: self.state.k,
            s: self.state.s.clone(),
            c: self.state.c.as_slice().to_vec(),
            kappa: obs.report.kappa.clone(),
            normalized: obs.report.normalized.clone(),
            signature: obs.report.signature,
            switched: obs.switched,
            frozen: obs.frozen,
            lyapunov_v,
        })
    }

    /// Evaluate centrality under the current costs, record, and integrate.
    pub fn step(&mut self) -> Result<StepOutcome, ControllerError> {
        let had_previous = self.prev_signature.is_some();
        let obs = self.observe()?;
        let record = self.record(&obs)?;
        let next = relax_step(&self.state, &obs.report.normalized, &self.cfg)?;
        let change = next
            .s
            .iter()
            .zip(&self.state.s)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let converged = had_previous && !obs.switched && change <= self.cfg.eps;
        self.state = next;
        Ok(StepOutcome { record, converged })
    }

    /// Record the current state without integrating.
    pub fn observe_terminal(&mut self) -> Result<IterationRecord, ControllerError> {
        let obs = self.observe()?;
        self.record(&obs)
    }
}

/// Runs the controller from `S = 0` until the pressure change drops to
/// `eps` with an unchanged path set, or `k_max` updates have been made.
pub fn run_relaxation(g: &Graph, cfg: &SraConfig) -> Result<RelaxTrace, ControllerError> {
    let mut relax = Relaxation::new(g, *cfg)?;
    let mut records = Vec::with_capacity(cfg.k_max + 1);
    let mut status = RunStatus::KMaxReached;
    for _ in 0..cfg.k_max {
        let out = relax.step()?;
        records.push(out.record);
        if out.converged {
            status = RunStatus::Converged;
            break;
        }
    }
    records.push(relax.observe_terminal()?);
    Ok(RelaxTrace {
        records,
        status,
        config: *cfg,
    })
}

/// Writes the per-iteration summary columns
/// `k,switched,max_s,max_kappa,lyapunov_v,signature`; with `full`, the
/// per-node `s_i`, `c_i`, `kappa_i` and `norm_i` columns follow.
pub fn write_trace_csv<W: Write>(
    trace: &RelaxTrace,
    out: W,
    full: bool,
) -> Result<(), ControllerError> {
    let mut w = csv::Writer::from_writer(out);
    let n = trace.first().s.len();
    let mut header: Vec<String> = [
        "k",
        "switched",
        "max_s",
        "max_kappa",
        "lyapunov_v",
        "signature",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    if full {
        for prefix in ["s", "c", "kappa", "norm"] {
            header.extend((0..n).map(|i| format!("{prefix}_{i}")));
        }
    }
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![
            r.k.to_string(),
            u8::from(r.switched).to_string(),
            r.max_s().to_string(),
            r.max_kappa().to_string(),
            r.lyapunov_v.to_string(),
            format!("{:016x}", r.signature),
        ];
        if full {
            for v in [&r.s, &r.c, &r.kappa, &r.normalized] {
                row.extend(v.iter().map(|x| x.to_string()));
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// A trace read back from CSV. Per-node vectors are empty unless the file
/// was written with `full`.
#[derive(Debug, Clone)]
pub struct LoadedTrace {
    pub records: Vec<IterationRecord>,
    pub full: bool,
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<LoadedTrace, ControllerError> {
    let fmt = |m: String| ControllerError::TraceFormat(m);
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < 6 || &header[0] != "k" || &header[5] != "signature" {
        return Err(fmt("missing summary columns".into()));
    }
    let extra = header.len() - 6;
    if extra % 4 != 0 {
        return Err(fmt(format!(
            "{extra} per-node columns is not a multiple of 4"
        )));
    }
    let n = extra / 4;
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64, ControllerError> {
            row[i]
                .parse::<f64>()
                .map_err(|_| fmt(format!("bad number '{}'", &row[i])))
        };
        let k = row[0]
            .parse::<usize>()
            .map_err(|_| fmt(format!("bad k '{}'", &row[0])))?;
        let switched = match &row[1] {
            "0" => false,
            "1" => true,
            other => return Err(fmt(format!("bad switched flag '{other}'"))),
        };
        let signature = u64::from_str_radix(&row[5], 16)
            .map_err(|_| fmt(format!("bad signature '{}'", &row[5])))?;
        let block = |b: usize| -> Result<Vec<f64>, ControllerError> {
            (0..n).map(|i| num(6 + b * n + i)).collect()
        };
        let (s, c, kappa, normalized) = (block(0)?, block(1)?, block(2)?, block(3)?);
        let (max_kappa, lyapunov_v) = (num(3)?, num(4)?);
        records.push(IterationRecord {
            k,
            s,
            c,
            // summary-only traces keep the peak as a one-element vector
            kappa: if n == 0 { vec![max_kappa] } else { kappa },
            normalized,
            signature,
            switched,
            frozen: false,
            lyapunov_v,
        });
    }
    if records.is_empty() {
        return Err(fmt("trace has no rows".into()));
    }
    Ok(LoadedTrace {
        records,
        full: n > 0,
    })
}
