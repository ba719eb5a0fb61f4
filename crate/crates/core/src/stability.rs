//! Runtime diagnostics for the controller's switched dynamics.
//!
//! The energy of a state is its squared distance to the centrality vector
//! currently driving it, `V(S) = ||S - c||^2`. For every step
//!
//! ```text
//! V(S_{k+1}) <= (1 - alpha) V(S_k) + (1 / alpha) ||c_k - c_{k+1}||^2
//! ```
//!
//! holds, and with no path switch `V` contracts by exactly `(1 - alpha)^2`.
//! Chaining the per-step bound over dwell blocks of length `t_d` gives
//! `V_{m+1} <= gamma^{t_d} V_m + C` with `gamma = 1 - alpha` and
//! `C = D^2 / alpha`, where `D` bounds the distance between any two
//! centrality vectors. Here `D` is estimated from the vectors a trace
//! actually visited, which can only under-estimate the true diameter.

use std::collections::HashSet;

use thiserror::Error;

use crate::controller::IterationRecord;

/// Slack for floating-point comparisons against the proved inequalities.
pub const INEQUALITY_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("expected {expected} entries, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("trace has {got} records, need at least {needed}")]
    TraceTooShort { needed: usize, got: usize },
    #[error("trace lacks per-node vectors; write it with the full layout")]
    MissingVectors,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no finite dwell time reaches radius {r_target_sq}: injection bound {c_tilde} is not below it")]
    Infeasible { c_tilde: f64, r_target_sq: f64 },
    #[error("capacity is undefined when every centrality is zero")]
    UndefinedCapacity,
}

fn check_len(expected: usize, actual: usize) -> Result<(), StabilityError> {
    if expected == actual {
        Ok(())
    } else {
        Err(StabilityError::DimensionMismatch { expected, actual })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `||s - target||^2`.
pub fn lyapunov_value(s: &[f64], target: &[f64]) -> Result<f64, StabilityError> {
    check_len(s.len(), target.len())?;
    Ok(sq_dist(s, target))
}

fn require_vectors(records: &[IterationRecord], needed: usize) -> Result<(), StabilityError> {
    if records.len() < needed {
        return Err(StabilityError::TraceTooShort {
            needed,
            got: records.len(),
        });
    }
    let n = records[0].s.len();
    if n == 0
        || records
            .iter()
            .any(|r| r.s.len() != n || r.normalized.len() != n)
    {
        return Err(StabilityError::MissingVectors);
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<(), StabilityError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(StabilityError::InvalidParameter(format!(
            "alpha must be in (0, 1), got {alpha}"
        )))
    }
}

/// Diameter (Euclidean) of the distinct centrality vectors seen in a trace.
pub fn observed_diameter(records: &[IterationRecord]) -> f64 {
    let mut seen = HashSet::new();
    let distinct: Vec<&[f64]> = records
        .iter()
        .filter(|r| seen.insert(r.normalized.iter().map(|x| x.to_bits()).collect::<Vec<_>>()))
        .map(|r| r.normalized.as_slice())
        .collect();
    let mut best: f64 = 0.0;
    for (i, a) in distinct.iter().enumerate() {
        for b in &distinct[i + 1..] {
            best = best.max(sq_dist(a, b));
        }
    }
    best.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovRecord {
    pub k: usize,
    pub v: f64,
    pub v_next: f64,
    /// `(1 / alpha) ||c_k - c_{k+1}||^2`.
    pub jump_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropJumpReport {
    pub records: Vec<LyapunovRecord>,
    pub delta_bar_obs: f64,
    /// Largest `V` over the final quarter of the trace.
    pub limsup_estimate: f64,
    /// `delta_bar_obs^2 / alpha^2`.
    pub limsup_bound: f64,
}

impl DropJumpReport {
    pub fn all_hold(&self) -> bool {
        self.records.iter().all(|r| r.holds)
    }

    pub fn violations(&self) -> usize {
        self.records.iter().filter(|r| !r.holds).count()
    }

    pub fn limsup_within_bound(&self) -> bool {
        self.limsup_estimate <= self.limsup_bound + INEQUALITY_SLACK
    }
}

/// Checks the per-step energy inequality along a trace.
pub fn verify_drop_jump(
    records: &[IterationRecord],
    alpha: f64,
) -> Result<DropJumpReport, StabilityError> {
    check_alpha(alpha)?;
    require_vectors(records, 2)?;
    let values: Vec<f64> = records
        .iter()
        .map(|r| sq_dist(&r.s, &r.normalized))
        .collect();
    let steps = records
        .windows(2)
        .zip(values.windows(2))
        .map(|(pair, v)| {
            let jump_bound = sq_dist(&pair[0].normalized, &pair[1].normalized) / alpha;
            let holds = v[1] <= (1.0 - alpha) * v[0] + jump_bound + INEQUALITY_SLACK;
            LyapunovRecord {
                k: pair[0].k,
                v: v[0],
                v_next: v[1],
                jump_bound,
                holds,
            }
        })
        .collect();
    let tail = &values[values.len() * 3 / 4..];
    let delta_bar_obs = observed_diameter(records);
    Ok(DropJumpReport {
        records: steps,
        delta_bar_obs,
        limsup_estimate: tail.iter().copied().fold(0.0, f64::max),
        limsup_bound: delta_bar_obs * delta_bar_obs / (alpha * alpha),
    })
}

/// `V_{k+1} / V_k` for consecutive records sharing a path signature, where
/// `V_k` exceeds `min_v`.
pub fn contraction_ratios(records: &[IterationRecord], min_v: f64) -> Vec<(usize, f64)> {
    records
        .windows(2)
        .filter(|p| p[0].signature == p[1].signature)
        .filter_map(|p| {
            let v0 = sq_dist(&p[0].s, &p[0].normalized);
            let v1 = sq_dist(&p[1].s, &p[1].normalized);
            (v0 > min_v).then_some((p[0].k, v1 / v0))
        })
        .collect()
}

/// Largest number of switches in any window of `window` consecutive
/// records. Windows longer than the trace are clamped to its length.
pub fn switch_census(records: &[IterationRecord], window: usize) -> usize {
    if records.is_empty() || window == 0 {
        return 0;
    }
    let flags: Vec<usize> = records.iter().map(|r| usize::from(r.switched)).collect();
    let w = window.min(flags.len());
    let mut count: usize = flags[..w].iter().sum();
    let mut best = count;
    for i in w..flags.len() {
        count = count + flags[i] - flags[i - w];
        best = best.max(count);
    }
    best
}

/// Ceiling on switches per window under dwell time `t_d`: `1 + floor(T / t_d)`.
pub fn switch_bound(window: usize, t_d: usize) -> usize {
    1 + window / t_d.max(1)
}

/// Block-endpoint energy radius `C / (1 - gamma^{t_d})`.
pub fn steady_state_radius(c_tilde: f64, alpha: f64, t_d: usize) -> f64 {
    let gamma = 1.0 - alpha;
    c_tilde / (1.0 - gamma.powi(t_d as i32))
}

/// Smallest dwell time whose steady-state radius, for injection
/// `C = delta_bar^2 / alpha`, does not exceed `r_target_sq`. At least 1.
pub fn design_dwell_time(
    delta_bar: f64,
    alpha: f64,
    r_target_sq: f64,
) -> Result<usize, StabilityError> {
    check_alpha(alpha)?;
    if !(delta_bar >= 0.0) || !(r_target_sq > 0.0) {
        return Err(StabilityError::InvalidParameter(format!(
            "need delta_bar >= 0 and r_target_sq > 0, got {delta_bar}, {r_target_sq}"
        )));
    }
    let c_tilde = delta_bar * delta_bar / alpha;
    if c_tilde == 0.0 {
        return Ok(1);
    }
    if c_tilde >= r_target_sq {
        return Err(StabilityError::Infeasible {
            c_tilde,
            r_target_sq,
        });
    }
    let gamma = 1.0 - alpha;
    let raw = ((1.0 - c_tilde / r_target_sq).ln() / gamma.ln())
        .ceil()
        .max(1.0) as usize;
    // the closed form can land one off when the log ratio is an integer
    let fits = |t: usize| steady_state_radius(c_tilde, alpha, t) <= r_target_sq;
    let mut t_d = raw;
    while t_d > 1 && fits(t_d - 1) {
        t_d -= 1;
    }
    while !fits(t_d) {
        t_d += 1;
    }
    Ok(t_d)
}

/// Upper bound on iterations until block-endpoint energy is within
/// `eps_sq`, starting from energy `v0`. `None` when `eps_sq` does not
/// exceed the steady-state radius.
pub fn steps_to_tube(v0: f64, c_tilde: f64, alpha: f64, t_d: usize, eps_sq: f64) -> Option<usize> {
    let radius = steady_state_radius(c_tilde, alpha, t_d);
    if !(eps_sq > radius) {
        return None;
    }
    if v0 + radius <= eps_sq {
        return Some(0);
    }
    let gamma = 1.0 - alpha;
    let blocks = (((eps_sq - radius) / v0).ln() / (t_d as f64 * gamma.ln())).ceil();
    Some(blocks.max(0.0) as usize * t_d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub index: usize,
    pub start: usize,
    pub v_start: f64,
    pub contained_switch: bool,
    /// Peak unnormalised centrality at the block start.
    pub peak_before: f64,
    /// Peak at the next block start (or the final record).
    pub peak_after: f64,
    pub delta: f64,
    /// `V_{m+1} <= gamma^{t_d} V_m + C_obs`; `None` for the last block.
    pub recurrence_holds: Option<bool>,
    /// `V(tau_m + t) <= gamma^t V_m` inside the block; `None` when a switch
    /// lands after the block start.
    pub intra_block_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockAudit {
    pub blocks: Vec<BlockReport>,
    /// `delta_bar_obs^2 / alpha`.
    pub c_tilde_obs: f64,
    pub t_d: usize,
}

impl BlockAudit {
    pub fn recurrence_violations(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.recurrence_holds == Some(false))
            .count()
    }

    pub fn intra_block_violations(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.intra_block_holds == Some(false))
            .count()
    }

    pub fn net_peak_drop(&self) -> f64 {
        match (self.blocks.first(), self.blocks.last()) {
            (Some(a), Some(b)) => a.peak_before - b.peak_after,
            _ => 0.0,
        }
    }
}

/// Tiles a trace into dwell blocks of length `t_d` and checks block-level
/// contraction and recurrence.
pub fn block_audit(
    records: &[IterationRecord],
    t_d: usize,
    alpha: f64,
) -> Result<BlockAudit, StabilityError> {
    check_alpha(alpha)?;
    if t_d == 0 {
        return Err(StabilityError::InvalidParameter("t_d must be >= 1".into()));
    }
    require_vectors(records, t_d)?;
    let gamma = 1.0 - alpha;
    let delta_bar = observed_diameter(records);
    let c_tilde_obs = delta_bar * delta_bar / alpha;
    let v: Vec<f64> = records
        .iter()
        .map(|r| sq_dist(&r.s, &r.normalized))
        .collect();
    let last = records.len() - 1;
    let blocks = (0..records.len())
        .step_by(t_d)
        .enumerate()
        .map(|(index, start)| {
            let next = start + t_d;
            let end = next.min(records.len());
            let after = next.min(last);
            let peak_before = records[start].max_kappa();
            let peak_after = records[after].max_kappa();
            let recurrence_holds = (next <= last).then(|| {
                v[next] <= gamma.powi(t_d as i32) * v[start] + c_tilde_obs + INEQUALITY_SLACK
            });
            let switch_inside = records[start + 1..end].iter().any(|r| r.switched);
            let intra_block_holds = (!switch_inside).then(|| {
                (start..end)
                    .all(|k| v[k] <= gamma.powi((k - start) as i32) * v[start] + INEQUALITY_SLACK)
            });
            BlockReport {
                index,
                start,
                v_start: v[start],
                contained_switch: records[start..end].iter().any(|r| r.switched),
                peak_before,
                peak_after,
                delta: peak_before - peak_after,
                recurrence_holds,
                intra_block_holds,
            }
        })
        .collect();
    Ok(BlockAudit {
        blocks,
        c_tilde_obs,
        t_d,
    })
}

/// Capacity under homogeneous-in-form arrivals proportional to centrality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityMetrics {
    /// `min mu_i / kappa_i` over nodes carrying transit load.
    pub rho_max: f64,
    /// `min(mu) / max(kappa)`.
    pub robust_lower: f64,
}

pub fn capacity_metrics(kappa: &[f64], mu: &[f64]) -> Result<CapacityMetrics, StabilityError> {
    check_len(kappa.len(), mu.len())?;
    if let Some(bad) = mu.iter().find(|&&m| !(m > 0.0)) {
        return Err(StabilityError::InvalidParameter(format!(
            "service rate {bad} is not positive"
        )));
    }
    if let Some(bad) = kappa.iter().find(|&&k| !(k >= 0.0)) {
        return Err(StabilityError::InvalidParameter(format!(
            "centrality {bad} is negative"
        )));
    }
    let kappa_max = kappa.iter().copied().fold(0.0, f64::max);
    if kappa_max == 0.0 {
        return Err(StabilityError::UndefinedCapacity);
    }
    let rho_max = kappa
        .iter()
        .zip(mu)
        .filter(|(&k, _)| k > 0.0)
        .map(|(k, m)| m / k)
        .fold(f64::INFINITY, f64::min);
    let mu_min = mu.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CapacityMetrics {
        rho_max,
        robust_lower: mu_min / kappa_max,
    })
}
