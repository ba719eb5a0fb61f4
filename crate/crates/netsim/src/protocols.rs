//! Routing policies: static shortest paths, the relaxation controller,
//! a queue-aware cost baseline, and Q-routing.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use sra_core::controller::{relax_step, run_relaxation, SraConfig, SraState};
use sra_core::routing::{betweenness, RouteTable};
use sra_core::{seeded_rng, CostVector, Graph, SimRng};

use crate::sim::{RoutingPolicy, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Sra,
    Dijkstra,
    Lirpd,
    QRouting,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Sra,
        PolicyKind::Dijkstra,
        PolicyKind::Lirpd,
        PolicyKind::QRouting,
    ];
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Sra => "sra",
            PolicyKind::Dijkstra => "dijkstra",
            PolicyKind::Lirpd => "lirpd",
            PolicyKind::QRouting => "qrouting",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sra" => Ok(PolicyKind::Sra),
            "dijkstra" => Ok(PolicyKind::Dijkstra),
            "lirpd" | "lirp-d" => Ok(PolicyKind::Lirpd),
            "qrouting" | "q-routing" | "q" => Ok(PolicyKind::QRouting),
            other => Err(SimError::InvalidPolicy(format!("unknown policy '{other}'"))),
        }
    }
}

/// How the relaxation policy behaves once traffic starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SraMode {
    /// One controller iteration per update hook.
    #[default]
    Live,
    /// Costs frozen at the converged (or `k_max`) iterate.
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QRoutingParams {
    pub learning_rate: f64,
    pub discount: f64,
    pub exploration: f64,
}

impl Default for QRoutingParams {
    fn default() -> Self {
        QRoutingParams {
            learning_rate: 0.1,
            discount: 0.9,
            exploration: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub sra: SraConfig,
    pub sra_mode: SraMode,
    /// Starting controller state; computed with `run_relaxation` if absent.
    pub sra_initial: Option<SraState>,
    pub qrouting: QRoutingParams,
    /// Queue capacity used to normalise LIRP-D costs.
    pub queue_capacity: usize,
    /// Seed for policies that randomise.
    pub seed: u64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams {
            sra: SraConfig::default(),
            sra_mode: SraMode::Live,
            sra_initial: None,
            qrouting: QRoutingParams::default(),
            queue_capacity: 50,
            seed: 0,
        }
    }
}

/// Final controller state of a full relaxation run on `g`.
pub fn converged_state(g: &Graph, cfg: &SraConfig) -> Result<SraState, SimError> {
    let trace = run_relaxation(g, cfg)?;
    let last = trace.last();
    Ok(SraState {
        s: last.s.clone(),
        c: CostVector::new(last.c.clone())?,
        k: last.k,
        dwell_remaining: 0,
    })
}

pub fn make_policy(
    kind: PolicyKind,
    g: &Graph,
    params: &PolicyParams,
) -> Result<Box<dyn RoutingPolicy>, SimError> {
    Ok(match kind {
        PolicyKind::Dijkstra => Box::new(Dijkstra::new(g)?),
        PolicyKind::Sra => {
            let state = match &params.sra_initial {
                Some(s) => s.clone(),
                None => converged_state(g, &params.sra)?,
            };
            Box::new(SraPolicy::new(g, params.sra, params.sra_mode, state)?)
        }
        PolicyKind::Lirpd => Box::new(Lirpd::new(g, params.queue_capacity)?),
        PolicyKind::QRouting => Box::new(QRouting::new(g, params.qrouting, params.seed)?),
    })
}

/// Shortest paths under unit costs, never updated.
#[derive(Debug, Clone)]
pub struct Dijkstra {
    table: RouteTable,
}

impl Dijkstra {
    pub fn new(g: &Graph) -> Result<Self, SimError> {
        Ok(Dijkstra {
            table: RouteTable::compute(g, &CostVector::uniform(g.node_count()))?,
        })
    }
}

impl RoutingPolicy for Dijkstra {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Dijkstra
    }

    fn next_hop(&mut self, at: usize, dest: usize, _queues: &[usize]) -> Option<usize> {
        self.table.next_hop(at, dest)
    }

    fn route_table(&self) -> RouteTable {
        self.table.clone()
    }
}

/// Shortest paths under controller costs.
#[derive(Debug, Clone)]
pub struct SraPolicy {
    cfg: SraConfig,
    mode: SraMode,
    state: SraState,
    table: RouteTable,
    prev_signature: Option<u64>,
    frozen: Option<Vec<f64>>,
}

impl SraPolicy {
    pub fn new(
        g: &Graph,
        cfg: SraConfig,
        mode: SraMode,
        state: SraState,
    ) -> Result<Self, SimError> {
        cfg.validate()?;
        if state.s.len() != g.node_count() {
            return Err(SimError::InvalidPolicy(format!(
                "controller state has {} nodes, graph has {}",
                state.s.len(),
                g.node_count()
            )));
        }
        let table = RouteTable::compute(g, &state.c)?;
        Ok(SraPolicy {
            cfg,
            mode,
            state,
            table,
            prev_signature: None,
            frozen: None,
        })
    }

    pub fn costs(&self) -> &CostVector {
        &self.state.c
    }

    fn advance(&mut self, g: &Graph) -> Result<(), SimError> {
        let normalized = if self.state.dwell_remaining > 0 {
            self.state.dwell_remaining -= 1;
            self.frozen
                .clone()
                .expect("dwell without frozen centrality")
        } else {
            let report = betweenness(g, &self.state.c)?;
            let switched = self.prev_signature.is_some_and(|p| p != report.signature);
            if switched && self.cfg.t_d > 1 {
                self.frozen = Some(report.normalized.clone());
                self.state.dwell_remaining = self.cfg.t_d - 1;
            }
            self.prev_signature = Some(report.signature);
            report.normalized
        };
        self.state = relax_step(&self.state, &normalized, &self.cfg)?;
        self.table = RouteTable::compute(g, &self.state.c)?;
        Ok(())
    }
}

impl RoutingPolicy for SraPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Sra
    }

    fn next_hop(&mut self, at: usize, dest: usize, _queues: &[usize]) -> Option<usize> {
        self.table.next_hop(at, dest)
    }

    fn update(&mut self, graph: &Graph, _queues: &[usize], timestep: u64) {
        // The starting table already reflects the converged state.
        if self.mode == SraMode::Static || timestep == 0 {
            return;
        }
        // Inputs were validated at construction, so failures are bugs.
        self.advance(graph)
            .expect("controller update on a validated graph");
    }

    fn route_table(&self) -> RouteTable {
        self.table.clone()
    }
}

/// Costs `1 + q_i / Q_cap` refreshed from the queue snapshot at each hook.
#[derive(Debug, Clone)]
pub struct Lirpd {
    queue_capacity: usize,
    table: RouteTable,
}

impl Lirpd {
    pub fn new(g: &Graph, queue_capacity: usize) -> Result<Self, SimError> {
        if queue_capacity == 0 {
            return Err(SimError::InvalidPolicy(
                "queue_capacity must be >= 1".into(),
            ));
        }
        Ok(Lirpd {
            queue_capacity,
            table: RouteTable::compute(g, &CostVector::uniform(g.node_count()))?,
        })
    }

    pub fn costs_for(&self, queues: &[usize]) -> CostVector {
        let cap = self.queue_capacity as f64;
        CostVector::new(queues.iter().map(|&q| 1.0 + q as f64 / cap).collect())
            .expect("queue-derived costs are finite and >= 1")
    }
}

impl RoutingPolicy for Lirpd {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lirpd
    }

    fn next_hop(&mut self, at: usize, dest: usize, _queues: &[usize]) -> Option<usize> {
        self.table.next_hop(at, dest)
    }

    fn update(&mut self, graph: &Graph, queues: &[usize], _timestep: u64) {
        let costs = self.costs_for(queues);
        self.table = RouteTable::compute(graph, &costs).expect("route table on a validated graph");
    }

    fn route_table(&self) -> RouteTable {
        self.table.clone()
    }
}

/// Hop counts between every pair by BFS; `None` across components.
fn hop_distances(g: &Graph) -> Vec<Vec<Option<u32>>> {
    let n = g.node_count();
    (0..n)
        .map(|src| {
            let mut dist = vec![None; n];
            dist[src] = Some(0);
            let mut frontier = std::collections::VecDeque::from([src]);
            while let Some(u) = frontier.pop_front() {
                let du = dist[u].expect("queued nodes have distances");
                for &v in g.neighbors(u) {
                    if dist[v].is_none() {
                        dist[v] = Some(du + 1);
                        frontier.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Q-routing with epsilon-greedy exploration.
///
/// `q[x][d][j]` estimates the delivery time from `x` to `d` when forwarding
/// to the `j`-th neighbour of `x`.
#[derive(Debug, Clone)]
pub struct QRouting {
    params: QRoutingParams,
    neighbors: Vec<Vec<usize>>,
    reachable: Vec<Vec<bool>>,
    q: Vec<Vec<Vec<f64>>>,
    rng: SimRng,
}

impl QRouting {
    pub fn new(g: &Graph, params: QRoutingParams, seed: u64) -> Result<Self, SimError> {
        let bad = |m: String| Err(SimError::InvalidPolicy(m));
        if !(0.0..=1.0).contains(&params.learning_rate)
            || !(0.0..=1.0).contains(&params.discount)
            || !(0.0..=1.0).contains(&params.exploration)
        {
            return bad(format!(
                "Q-routing parameters must lie in [0, 1], got {params:?}"
            ));
        }
        let n = g.node_count();
        let hops = hop_distances(g);
        let neighbors: Vec<Vec<usize>> = (0..n).map(|x| g.neighbors(x).to_vec()).collect();
        let q = (0..n)
            .map(|x| {
                (0..n)
                    .map(|d| {
                        neighbors[x]
                            .iter()
                            .map(|&a| hops[a][d].map_or(0.0, |h| f64::from(h) + 1.0))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let reachable = hops
            .iter()
            .map(|row| row.iter().map(Option::is_some).collect())
            .collect();
        Ok(QRouting {
            params,
            neighbors,
            reachable,
            q,
            rng: seeded_rng(seed),
        })
    }

    pub fn q_value(&self, at: usize, dest: usize, via: usize) -> Option<f64> {
        let j = self.neighbors[at].iter().position(|&a| a == via)?;
        Some(self.q[at][dest][j])
    }

    /// All Q estimates, for auditing.
    pub fn q_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.q.iter().flatten().flatten().copied()
    }

    fn best(&self, at: usize, dest: usize) -> Option<usize> {
        let row = &self.q[at][dest];
        let mut best: Option<usize> = None;
        for (j, &v) in row.iter().enumerate() {
            if best.is_none_or(|b| v < row[b]) {
                best = Some(j);
            }
        }
        best
    }

    fn min_estimate(&self, at: usize, dest: usize) -> f64 {
        if at == dest {
            return 0.0;
        }
        self.q[at][dest]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

impl RoutingPolicy for QRouting {
    fn kind(&self) -> PolicyKind {
        PolicyKind::QRouting
    }

    fn next_hop(&mut self, at: usize, dest: usize, queues: &[usize]) -> Option<usize> {
        if at == dest || !self.reachable[at][dest] || self.neighbors[at].is_empty() {
            return None;
        }
        let deg = self.neighbors[at].len();
        let j = if self.rng.random::<f64>() < self.params.exploration {
            self.rng.random_range(0..deg)
        } else {
            self.best(at, dest)?
        };
        let y = self.neighbors[at][j];
        let estimate = if y == dest {
            0.0
        } else {
            self.min_estimate(y, dest)
        };
        let target = queues[y] as f64 + 1.0 + self.params.discount * estimate;
        let q = &mut self.q[at][dest][j];
        *q += self.params.learning_rate * (target - *q);
        Some(y)
    }

    fn route_table(&self) -> RouteTable {
        let n = self.neighbors.len();
        let rows = (0..n)
            .map(|x| {
                (0..n)
                    .map(|d| {
                        if x == d || !self.reachable[x][d] {
                            None
                        } else {
                            self.best(x, d).map(|j| self.neighbors[x][j])
                        }
                    })
                    .collect()
            })
            .collect();
        RouteTable::from_rows(rows)
    }
}
