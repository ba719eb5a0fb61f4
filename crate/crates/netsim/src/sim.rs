//! Timestepped packet simulator.
//!
//! Every timestep runs, in order:
//!
//! 1. the policy update hook, when `t % update_interval == 0`;
//! 2. generation: `Poisson(lambda)` packets with uniform ordered
//!    `(source, destination)` pairs, enqueued at the source if it has room;
//! 3. service: every node pops up to `service_rate` packets FIFO and hands
//!    each to its policy-chosen next hop. Arrival at the destination is
//!    delivery; anywhere else the packet must fit the receiver's per-step
//!    ingress budget and its queue;
//! 4. bookkeeping. Only packets created at or after `warmup` enter the
//!    reported metrics.
//!
//! All nodes pop before any transfer lands, so a packet moves at most one
//! hop per timestep.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use sra_core::routing::{mean_route_hops, RouteTable, RoutingError};
use sra_core::{seeded_rng, CostVector, Graph, SimRng};

use crate::protocols::PolicyKind;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid traffic config: {0}")]
    InvalidConfig(String),
    #[error("invalid policy parameters: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Controller(#[from] sra_core::controller::ControllerError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficConfig {
    pub total_timesteps: u64,
    pub warmup: u64,
    /// Packets a node forwards per timestep.
    pub service_rate: usize,
    /// Packets a node accepts from neighbours per timestep.
    pub proc_capacity: usize,
    pub queue_capacity: usize,
    /// Offered load; 1.0 matches aggregate forwarding capacity.
    pub load: f64,
    pub seed: u64,
    pub update_interval: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            total_timesteps: 2000,
            warmup: 300,
            service_rate: 1,
            proc_capacity: 10,
            queue_capacity: 50,
            load: 1.0,
            seed: 0,
            update_interval: 50,
        }
    }
}

impl TrafficConfig {
    pub fn with_load(self, load: f64) -> Self {
        TrafficConfig { load, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TrafficConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.warmup >= self.total_timesteps {
            return bad(format!(
                "warmup {} must be below total_timesteps {}",
                self.warmup, self.total_timesteps
            ));
        }
        if self.service_rate == 0 || self.proc_capacity == 0 || self.queue_capacity == 0 {
            return bad("capacities must be >= 1".into());
        }
        if !(self.load >= 0.0 && self.load.is_finite()) {
            return bad(format!("load must be finite and >= 0, got {}", self.load));
        }
        if self.update_interval == 0 {
            return bad("update_interval must be >= 1".into());
        }
        Ok(())
    }
}

/// Mean packet arrivals per timestep: `load * N * mu / mean_hops`, with the
/// mean hop count of uniform-cost routes.
pub fn arrival_rate(g: &Graph, cfg: &TrafficConfig) -> Result<f64, SimError> {
    let hops = mean_route_hops(g, &CostVector::uniform(g.node_count()))?;
    if hops == 0.0 {
        return Ok(0.0);
    }
    Ok(cfg.load * g.node_count() as f64 * cfg.service_rate as f64 / hops)
}

/// A routing decision-maker driven by the simulator.
pub trait RoutingPolicy: Send {
    fn kind(&self) -> PolicyKind;

    /// Neighbour of `at` to forward a packet for `dest` to, or `None` when
    /// `dest` cannot be reached. `queues` holds current queue lengths.
    fn next_hop(&mut self, at: usize, dest: usize, queues: &[usize]) -> Option<usize>;

    /// Periodic hook, fired every `update_interval` timesteps.
    fn update(&mut self, _graph: &Graph, _queues: &[usize], _timestep: u64) {}

    /// Full next-hop snapshot consistent with greedy `next_hop` queries.
    fn route_table(&self) -> RouteTable;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub source: usize,
    pub destination: usize,
    pub created_at: u64,
    pub hops: u32,
}

/// Packet fates. Every generated packet ends up in exactly one bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PacketCounts {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub unreachable: u64,
    pub in_flight: u64,
}

impl PacketCounts {
    pub fn is_conserved(&self) -> bool {
        self.generated == self.delivered + self.dropped + self.unreachable + self.in_flight
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficMetrics {
    /// Delivered packets per post-warmup timestep.
    pub throughput: f64,
    pub loss_rate: f64,
    /// Mean timesteps from creation to delivery; 0 with no deliveries.
    pub mean_latency: f64,
    /// `delivered / (delivered + dropped + unreachable)`; 1 when empty.
    pub pdr: f64,
    /// Counts for packets created at or after warmup.
    pub counts: PacketCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub metrics: TrafficMetrics,
    /// Counts over every packet of the run, warmup included.
    pub totals: PacketCounts,
    pub arrival_rate: f64,
    pub max_queue_len: usize,
    /// Delivered packets whose latency was below their hop count.
    pub latency_violations: u64,
}

/// Live state of one simulation run.
pub struct Simulator<'a> {
    graph: &'a Graph,
    policy: &'a mut dyn RoutingPolicy,
    cfg: TrafficConfig,
    rng: SimRng,
    arrivals: Option<Poisson<f64>>,
    arrival_rate: f64,
    component: Vec<usize>,
    queues: Vec<VecDeque<Packet>>,
    queue_lens: Vec<usize>,
    ingress: Vec<usize>,
    now: u64,
    next_id: u64,
    totals: PacketCounts,
    measured: PacketCounts,
    latency_sum: u64,
    max_queue_len: usize,
    latency_violations: u64,
}

impl<'a> Simulator<'a> {
    pub fn new(
        graph: &'a Graph,
        policy: &'a mut dyn RoutingPolicy,
        cfg: TrafficConfig,
    ) -> Result<Self, SimError> {
        let rate = arrival_rate(graph, &cfg)?;
        Self::with_arrival_rate(graph, policy, cfg, rate)
    }

    /// Like [`Simulator::new`] but with an explicit mean arrival rate.
    pub fn with_arrival_rate(
        graph: &'a Graph,
        policy: &'a mut dyn RoutingPolicy,
        cfg: TrafficConfig,
        rate: f64,
    ) -> Result<Self, SimError> {
        cfg.validate()?;
        let arrivals = if rate > 0.0 {
            Some(Poisson::new(rate).map_err(|e| SimError::InvalidConfig(e.to_string()))?)
        } else {
            None
        };
        let n = graph.node_count();
        Ok(Simulator {
            graph,
            policy,
            cfg,
            rng: seeded_rng(cfg.seed),
            arrivals,
            arrival_rate: rate,
            component: graph.components(),
            queues: vec![VecDeque::new(); n],
            queue_lens: vec![0; n],
            ingress: vec![0; n],
            now: 0,
            next_id: 0,
            totals: PacketCounts::default(),
            measured: PacketCounts::default(),
            latency_sum: 0,
            max_queue_len: 0,
            latency_violations: 0,
        })
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn queue_lengths(&self) -> &[usize] {
        &self.queue_lens
    }

    fn is_measured(&self, p: &Packet) -> bool {
        p.created_at >= self.cfg.warmup
    }

    fn tally(&mut self, p: &Packet, bump: impl Fn(&mut PacketCounts)) {
        bump(&mut self.totals);
        if self.is_measured(p) {
            bump(&mut self.measured);
        }
    }

    /// Creates a packet at the current timestep and enqueues it at its
    /// source. Returns false if it was dropped or is unreachable.
    pub fn inject(&mut self, source: usize, destination: usize) -> bool {
        assert_ne!(source, destination, "packet source equals destination");
        let p = Packet {
            id: self.next_id,
            source,
            destination,
            created_at: self.now,
            hops: 0,
        };
        self.next_id += 1;
        self.tally(&p, |c| c.generated += 1);
        if self.component[source] != self.component[destination] {
            self.tally(&p, |c| c.unreachable += 1);
            return false;
        }
        if self.queue_lens[source] >= self.cfg.queue_capacity {
            self.tally(&p, |c| c.dropped += 1);
            return false;
        }
        self.push(source, p);
        true
    }

    fn push(&mut self, node: usize, p: Packet) {
        self.queues[node].push_back(p);
        self.queue_lens[node] += 1;
        self.max_queue_len = self.max_queue_len.max(self.queue_lens[node]);
        debug_assert!(self.queue_lens[node] <= self.cfg.queue_capacity);
    }

    fn generate(&mut self) {
        let n = self.graph.node_count();
        let Some(dist) = self.arrivals else { return };
        if n < 2 {
            return;
        }
        let count = dist.sample(&mut self.rng) as u64;
        for _ in 0..count {
            let s = self.rng.random_range(0..n);
            let mut t = self.rng.random_range(0..n - 1);
            if t >= s {
                t += 1;
            }
            self.inject(s, t);
        }
    }

    fn serve(&mut self) {
        let n = self.graph.node_count();
        let mut moves = Vec::new();
        for x in 0..n {
            for _ in 0..self.cfg.service_rate {
                let Some(p) = self.queues[x].pop_front() else {
                    break;
                };
                self.queue_lens[x] -= 1;
                let hop = self.policy.next_hop(x, p.destination, &self.queue_lens);
                moves.push((p, hop));
            }
        }
        self.ingress.iter_mut().for_each(|c| *c = 0);
        let arrival_time = self.now + 1;
        for (mut p, hop) in moves {
            let Some(y) = hop else {
                self.tally(&p, |c| c.unreachable += 1);
                continue;
            };
            p.hops += 1;
            if y == p.destination {
                let latency = arrival_time - p.created_at;
                if latency < u64::from(p.hops) {
                    self.latency_violations += 1;
                }
                if self.is_measured(&p) {
                    self.latency_sum += latency;
                }
                self.tally(&p, |c| c.delivered += 1);
                continue;
            }
            if self.ingress[y] >= self.cfg.proc_capacity
                || self.queue_lens[y] >= self.cfg.queue_capacity
            {
                self.tally(&p, |c| c.dropped += 1);
                continue;
            }
            self.ingress[y] += 1;
            self.push(y, p);
        }
    }

    /// Advances one timestep.
    pub fn step(&mut self) {
        if self.now.is_multiple_of(self.cfg.update_interval) {
            self.policy.update(self.graph, &self.queue_lens, self.now);
        }
        if self.now < self.cfg.total_timesteps {
            self.generate();
        }
        self.serve();
        self.now += 1;
    }

    /// Runs to `total_timesteps` and reports.
    pub fn run(mut self) -> SimOutcome {
        while self.now < self.cfg.total_timesteps {
            self.step();
        }
        self.finish()
    }

    /// Stops the clock and reports; whatever is still queued is in flight.
    pub fn finish(self) -> SimOutcome {
        let mut totals = self.totals;
        let mut measured = self.measured;
        for p in self.queues.iter().flatten() {
            totals.in_flight += 1;
            if p.created_at >= self.cfg.warmup {
                measured.in_flight += 1;
            }
        }
        let window = self
            .cfg
            .total_timesteps
            .saturating_sub(self.cfg.warmup)
            .max(1) as f64;
        let resolved = measured.delivered + measured.dropped + measured.unreachable;
        let metrics = TrafficMetrics {
            throughput: measured.delivered as f64 / window,
            loss_rate: if measured.generated == 0 {
                0.0
            } else {
                measured.dropped as f64 / measured.generated as f64
            },
            mean_latency: if measured.delivered == 0 {
                0.0
            } else {
                self.latency_sum as f64 / measured.delivered as f64
            },
            pdr: if resolved == 0 {
                1.0
            } else {
                measured.delivered as f64 / resolved as f64
            },
            counts: measured,
        };
        SimOutcome {
            metrics,
            totals,
            arrival_rate: self.arrival_rate,
            max_queue_len: self.max_queue_len,
            latency_violations: self.latency_violations,
        }
    }
}

/// One full run of `policy` on `g`.
pub fn simulate(
    g: &Graph,
    policy: &mut dyn RoutingPolicy,
    cfg: &TrafficConfig,
) -> Result<SimOutcome, SimError> {
    Ok(Simulator::new(g, policy, *cfg)?.run())
}
