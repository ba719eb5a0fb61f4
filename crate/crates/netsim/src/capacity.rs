//! Critical offered load: the smallest load at which mean loss crosses a
//! threshold, found by a doubling sweep refined by bisection.

use sra_core::Graph;

use crate::sim::{simulate, RoutingPolicy, SimError, TrafficConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalLoadSearch {
    pub loss_threshold: f64,
    /// Seeds per load point, `cfg.seed .. cfg.seed + seeds`.
    pub seeds: u64,
    /// Stop bisecting once the bracket is this narrow.
    pub resolution: f64,
    pub max_load: f64,
}

impl Default for CriticalLoadSearch {
    fn default() -> Self {
        CriticalLoadSearch {
            loss_threshold: 0.05,
            seeds: 5,
            resolution: 0.02,
            max_load: 10.0,
        }
    }
}

impl CriticalLoadSearch {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.loss_threshold > 0.0
            && self.loss_threshold <= 1.0
            && self.seeds >= 1
            && self.resolution > 0.0
            && self.max_load >= self.resolution;
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(format!(
                "invalid critical-load search {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub load: f64,
    pub mean_loss: f64,
    pub sd_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalLoadReport {
    /// `None` when the threshold is never exceeded up to `max_load`.
    pub critical: Option<f64>,
    /// Every evaluated point, sorted by load.
    pub sweep: Vec<SweepPoint>,
}

impl CriticalLoadReport {
    pub fn is_unbounded(&self) -> bool {
        self.critical.is_none()
    }

    /// Consecutive sweep points whose mean loss falls by more than one
    /// seed standard deviation as load rises.
    pub fn monotonicity_violations(&self) -> usize {
        self.sweep
            .windows(2)
            .filter(|w| w[1].mean_loss < w[0].mean_loss - w[0].sd_loss.max(w[1].sd_loss) - 1e-12)
            .count()
    }
}

fn evaluate<F>(
    g: &Graph,
    make: &F,
    cfg: &TrafficConfig,
    search: &CriticalLoadSearch,
    load: f64,
) -> Result<SweepPoint, SimError>
where
    F: Fn(u64) -> Result<Box<dyn RoutingPolicy>, SimError>,
{
    let losses = (0..search.seeds)
        .map(|i| {
            let run = cfg.with_load(load).with_seed(cfg.seed.wrapping_add(i));
            let mut policy = make(run.seed)?;
            Ok(simulate(g, policy.as_mut(), &run)?.metrics.loss_rate)
        })
        .collect::<Result<Vec<f64>, SimError>>()?;
    let n = losses.len() as f64;
    let mean = losses.iter().sum::<f64>() / n;
    let var = if losses.len() > 1 {
        losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(SweepPoint {
        load,
        mean_loss: mean,
        sd_loss: var.sqrt(),
    })
}

/// Locates the critical load of the policies produced by `make`, which is
/// called with each run's seed to build a fresh policy.
pub fn critical_load<F>(
    g: &Graph,
    make: F,
    cfg: &TrafficConfig,
    search: &CriticalLoadSearch,
) -> Result<CriticalLoadReport, SimError>
where
    F: Fn(u64) -> Result<Box<dyn RoutingPolicy>, SimError>,
{
    cfg.validate()?;
    search.validate()?;
    let mut sweep = Vec::new();
    let mut lo = 0.0;
    let mut hi = None;
    let mut load = search.resolution;
    loop {
        let point = evaluate(g, &make, cfg, search, load)?;
        sweep.push(point);
        if point.mean_loss > search.loss_threshold {
            hi = Some(load);
            break;
        }
        lo = load;
        if load >= search.max_load {
            break;
        }
        load = (load * 2.0).min(search.max_load);
    }
    let Some(mut hi) = hi else {
        return Ok(CriticalLoadReport {
            critical: None,
            sweep,
        });
    };
    while hi - lo > search.resolution {
        let mid = 0.5 * (lo + hi);
        let point = evaluate(g, &make, cfg, search, mid)?;
        sweep.push(point);
        if point.mean_loss > search.loss_threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    sweep.sort_by(|a, b| a.load.total_cmp(&b.load));
    Ok(CriticalLoadReport {
        critical: Some(hi),
        sweep,
    })
}
