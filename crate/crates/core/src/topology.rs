//! Undirected topologies: the [`Graph`] plant, the three random-graph
//! families used in the experiments, and a plain edge-list format.
//!
//! All generators draw from [`crate::SimRng`] (ChaCha8 seeded through
//! `seed_from_u64`), so a `(model, parameters, seed)` triple maps to the same
//! graph on every platform.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::seeded_rng;

/// Number of reseeds attempted before giving up on a connected draw.
pub const MAX_CONNECT_RETRIES: u32 = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) references a node outside [0, {2})")]
    NodeOutOfRange(usize, usize, usize),
    #[error("graph is not connected ({0} components)")]
    Disconnected(usize),
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Simple undirected graph with node ids `0..n` and sorted adjacency lists.
///
/// Graphs built through [`Graph::from_edges`] are connected with `n >= 3`.
/// [`Graph::without_nodes`] is the one constructor that may hand back a
/// disconnected graph (damaged topologies in the attack experiment).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n < 3 {
            return Err(GraphError::TooFewNodes(n));
        }
        let g = Self::build(n, edges)?;
        let comps = g.component_count();
        if comps != 1 {
            return Err(GraphError::Disconnected(comps));
        }
        Ok(g)
    }

    fn build<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut sets = vec![BTreeSet::new(); n];
        let mut edge_count = 0;
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !sets[u].insert(v) {
                return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
            }
            sets[v].insert(u);
            edge_count += 1;
        }
        Ok(Self::from_sets(sets, edge_count))
    }

    fn from_sets(sets: Vec<BTreeSet<usize>>, edge_count: usize) -> Self {
        let adj = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        Graph { adj, edge_count }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Neighbours of `v` in ascending id order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(min, max)` pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Component label per node; labels are assigned in order of the
    /// smallest node id in each component.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.components().into_iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Induced subgraph on the nodes not listed in `removed`, renumbered
    /// densely in ascending original-id order. Returns the new graph and the
    /// original id of every surviving node. The result may be disconnected.
    pub fn without_nodes(&self, removed: &[usize]) -> (Graph, Vec<usize>) {
        let n = self.node_count();
        let mut gone = vec![false; n];
        for &r in removed {
            gone[r] = true;
        }
        let kept: Vec<usize> = (0..n).filter(|&v| !gone[v]).collect();
        let mut new_id = vec![usize::MAX; n];
        for (i, &v) in kept.iter().enumerate() {
            new_id[v] = i;
        }
        let mut sets = vec![BTreeSet::new(); kept.len()];
        let mut edge_count = 0;
        for (u, v) in self.edges() {
            if gone[u] || gone[v] {
                continue;
            }
            sets[new_id[u]].insert(new_id[v]);
            sets[new_id[v]].insert(new_id[u]);
            edge_count += 1;
        }
        (Graph::from_sets(sets, edge_count), kept)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Barabási–Albert preferential attachment.
    Ba,
    /// Watts–Strogatz ring rewiring.
    Ws,
    /// Erdős–Rényi G(n, p).
    Er,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Ba => "ba",
            Model::Ws => "ws",
            Model::Er => "er",
        })
    }
}

impl FromStr for Model {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ba" => Ok(Model::Ba),
            "ws" => Ok(Model::Ws),
            "er" => Ok(Model::Er),
            other => Err(TopologyError::InvalidParameter(format!(
                "unknown model '{other}'"
            ))),
        }
    }
}

/// Parameters for one random topology draw. Only the fields belonging to
/// `model` are read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologySpec {
    pub model: Model,
    pub n: usize,
    pub ba_m: usize,
    pub ws_k: usize,
    pub ws_p: f64,
    pub er_p: f64,
    pub seed: u64,
}

impl TopologySpec {
    pub fn new(model: Model, seed: u64) -> Self {
        TopologySpec {
            model,
            n: 100,
            ba_m: 4,
            ws_k: 8,
            ws_p: 0.1,
            er_p: 0.1,
            seed,
        }
    }

    pub fn ba(n: usize, m: usize, seed: u64) -> Self {
        TopologySpec {
            n,
            ba_m: m,
            ..Self::new(Model::Ba, seed)
        }
    }

    pub fn ws(n: usize, k: usize, p: f64, seed: u64) -> Self {
        TopologySpec {
            n,
            ws_k: k,
            ws_p: p,
            ..Self::new(Model::Ws, seed)
        }
    }

    pub fn er(n: usize, p: f64, seed: u64) -> Self {
        TopologySpec {
            n,
            er_p: p,
            ..Self::new(Model::Er, seed)
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TopologySpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |msg: String| Err(TopologyError::InvalidParameter(msg));
        if self.n < 3 {
            return bad(format!("n must be >= 3, got {}", self.n));
        }
        match self.model {
            Model::Ba => {
                if self.ba_m == 0 || self.ba_m >= self.n {
                    return bad(format!("ba_m must be in [1, n), got {}", self.ba_m));
                }
            }
            Model::Ws => {
                if !self.ws_k.is_multiple_of(2) || self.ws_k < 2 || self.ws_k >= self.n {
                    return bad(format!(
                        "ws_k must be even and in [2, n), got {}",
                        self.ws_k
                    ));
                }
                if !(0.0..=1.0).contains(&self.ws_p) {
                    return bad(format!("ws_p must be in [0, 1], got {}", self.ws_p));
                }
            }
            Model::Er => {
                if !(self.er_p > 0.0 && self.er_p <= 1.0) {
                    return bad(format!("er_p must be in (0, 1], got {}", self.er_p));
                }
            }
        }
        Ok(())
    }
}

/// A generated graph plus the number of reseeds it took to get a connected
/// draw (always 0 for BA).
#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: Graph,
    pub retries: u32,
}

pub fn generate(spec: &TopologySpec) -> Result<Graph, TopologyError> {
    generate_with_retries(spec).map(|g| g.graph)
}

pub fn generate_with_retries(spec: &TopologySpec) -> Result<Generated, TopologyError> {
    spec.validate()?;
    if spec.model == Model::Ba {
        let graph = barabasi_albert(spec.n, spec.ba_m, spec.seed);
        return Ok(Generated { graph, retries: 0 });
    }
    for retries in 0..MAX_CONNECT_RETRIES {
        let seed = spec.seed.wrapping_add(retries as u64);
        let g = match spec.model {
            Model::Ws => watts_strogatz(spec.n, spec.ws_k, spec.ws_p, seed),
            Model::Er => erdos_renyi(spec.n, spec.er_p, seed),
            Model::Ba => unreachable!(),
        };
        if g.is_connected() {
            return Ok(Generated { graph: g, retries });
        }
    }
    Err(TopologyError::Generation(format!(
        "no connected {} graph after {MAX_CONNECT_RETRIES} seeds starting at {}",
        spec.model, spec.seed
    )))
}

fn barabasi_albert(n: usize, m: usize, seed: u64) -> Graph {
    let mut rng = seeded_rng(seed);
    let mut sets = vec![BTreeSet::new(); n];
    // one entry per edge endpoint, so uniform sampling is degree-proportional
    let mut endpoints = Vec::with_capacity(2 * m * n);
    let mut edge_count = 0;
    let core = (m + 1).min(n);
    for u in 0..core {
        for v in (u + 1)..core {
            sets[u].insert(v);
            sets[v].insert(u);
            endpoints.push(u);
            endpoints.push(v);
            edge_count += 1;
        }
    }
    let mut targets = Vec::with_capacity(m);
    for v in core..n {
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            sets[v].insert(t);
            sets[t].insert(v);
            endpoints.push(v);
            endpoints.push(t);
            edge_count += 1;
        }
    }
    Graph::from_sets(sets, edge_count)
}

fn watts_strogatz(n: usize, k: usize, p: f64, seed: u64) -> Graph {
    let mut rng = seeded_rng(seed);
    let mut sets = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            sets[u].insert(v);
            sets[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !sets[u].contains(&v) || !(rng.random::<f64>() < p) {
                continue;
            }
            if sets[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !sets[u].contains(&w) {
                    break w;
                }
            };
            sets[u].remove(&v);
            sets[v].remove(&u);
            sets[u].insert(w);
            sets[w].insert(u);
        }
    }
    let edge_count = n * k / 2;
    Graph::from_sets(sets, edge_count)
}

fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = seeded_rng(seed);
    let mut sets = vec![BTreeSet::new(); n];
    let mut edge_count = 0;
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                sets[u].insert(v);
                sets[v].insert(u);
                edge_count += 1;
            }
        }
    }
    Graph::from_sets(sets, edge_count)
}

/// Parses the `u v` per line edge-list format. `#` lines and blank lines are
/// skipped; the node count is one more than the largest id seen.
pub fn load_edge_list(text: &str) -> Result<Graph, TopologyError> {
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    let mut max_id = 0;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        last_line = line;
        let fail = |message: String| TopologyError::Format { line, message };
        let mut tokens = trimmed.split_whitespace();
        let mut next_id = || -> Result<usize, TopologyError> {
            let tok = tokens
                .next()
                .ok_or_else(|| fail("expected two node ids".into()))?;
            tok.parse::<usize>()
                .map_err(|_| fail(format!("'{tok}' is not a node id")))
        };
        let u = next_id()?;
        let v = next_id()?;
        if tokens.next().is_some() {
            return Err(fail("more than two tokens".into()));
        }
        if u == v {
            return Err(fail(format!("self-loop at node {u}")));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(fail(format!("duplicate edge ({u}, {v})")));
        }
        max_id = max_id.max(u).max(v);
        edges.push((u, v));
    }
    Graph::from_edges(max_id + 1, edges).map_err(|e| TopologyError::Format {
        line: last_line,
        message: e.to_string(),
    })
}

/// Writes edges sorted by `(min id, max id)`, one `u v` pair per line.
pub fn save_edge_list(g: &Graph) -> String {
    g.edges()
        .map(|(u, v)| format!("{u} {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
