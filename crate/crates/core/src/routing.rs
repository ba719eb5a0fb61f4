//! Node-cost shortest paths and betweenness.
//!
//! A path's cost is the sum of the transit costs of every node on it,
//! endpoints included. Distances are accumulated when a node is reached:
//! `dist[source] = c[source]` and `dist[v] = dist[u] + c[v]` across `u -> v`.
//! Two path costs are treated as equal when they differ by at most
//! [`TIE_TOLERANCE`] relative to the larger of 1 and the incumbent.
//!
//! Betweenness follows Brandes: one Dijkstra per source, then dependencies
//! are pushed back through the predecessor DAG. Pairs are unordered, so the
//! ordered-pair sum is halved.
//!
//! Floating-point accumulation runs in an order derived from the DAG shape
//! alone (depth, then node id), so two cost vectors with the same tied
//! shortest-path structure give bit-identical centralities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::topology::Graph;

/// Relative tolerance for treating two path costs as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("expected {expected} entries, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("node cost {value} at node {node} is not a finite value >= 1")]
    InvalidCost { node: usize, value: f64 },
    #[error("centrality entry {value} at node {node} is negative")]
    NegativeCentrality { node: usize, value: f64 },
}

/// True when `candidate` ties `incumbent` under [`TIE_TOLERANCE`].
pub fn costs_tied(incumbent: f64, candidate: f64) -> bool {
    (incumbent - candidate).abs() <= TIE_TOLERANCE * incumbent.max(1.0)
}

/// Per-node transit costs, each finite and at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(costs: Vec<f64>) -> Result<Self, RoutingError> {
        for (node, &value) in costs.iter().enumerate() {
            if !(value.is_finite() && value >= 1.0) {
                return Err(RoutingError::InvalidCost { node, value });
            }
        }
        Ok(CostVector(costs))
    }

    pub fn uniform(n: usize) -> Self {
        CostVector(vec![1.0; n])
    }

    /// `c_i = 1 + beta * s_i`. Callers guarantee `s_i >= 0`, `beta >= 0`.
    pub fn from_pressure(pressure: &[f64], beta: f64) -> Self {
        CostVector(pressure.iter().map(|&s| 1.0 + beta * s).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CostVector(self.0.iter().map(|c| c * factor).collect())
    }
}

impl std::ops::Index<usize> for CostVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Single-source shortest-path DAG under node costs.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathDag {
    pub source: usize,
    /// Cumulative node cost from the source; `INFINITY` when unreachable.
    pub dist: Vec<f64>,
    /// Number of tied shortest paths; 0 when unreachable.
    pub sigma: Vec<f64>,
    /// Predecessors on tied shortest paths, ascending ids.
    pub preds: Vec<Vec<usize>>,
    /// Reachable nodes in a topological order of the DAG: by depth, then id.
    pub order: Vec<usize>,
}

impl ShortestPathDag {
    pub fn is_reachable(&self, v: usize) -> bool {
        self.dist[v].is_finite()
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_len(expected: usize, actual: usize) -> Result<(), RoutingError> {
    if expected == actual {
        Ok(())
    } else {
        Err(RoutingError::DimensionMismatch { expected, actual })
    }
}

pub fn shortest_path_dag(
    g: &Graph,
    costs: &CostVector,
    source: usize,
) -> Result<ShortestPathDag, RoutingError> {
    check_len(g.node_count(), costs.len())?;
    Ok(dag_unchecked(g, costs.as_slice(), source))
}

fn dag_unchecked(g: &Graph, c: &[f64], source: usize) -> ShortestPathDag {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut settle_order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();

    dist[source] = c[source];
    heap.push(HeapEntry {
        dist: c[source],
        node: source,
    });
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if settled[u] || d > dist[u] {
            continue;
        }
        settled[u] = true;
        settle_order.push(u);
        for &v in g.neighbors(u) {
            // costs >= 1, so a settled node can never be tied again
            if settled[v] {
                continue;
            }
            let alt = dist[u] + c[v];
            if dist[v].is_infinite() {
                dist[v] = alt;
                preds[v].push(u);
                heap.push(HeapEntry { dist: alt, node: v });
            } else if costs_tied(dist[v], alt) {
                preds[v].push(u);
            } else if alt < dist[v] {
                dist[v] = alt;
                preds[v].clear();
                preds[v].push(u);
                heap.push(HeapEntry { dist: alt, node: v });
            }
        }
    }

    let mut depth = vec![0usize; n];
    for &v in &settle_order {
        preds[v].sort_unstable();
        depth[v] = preds[v].iter().map(|&p| depth[p] + 1).max().unwrap_or(0);
    }
    let mut order = settle_order;
    order.sort_unstable_by_key(|&v| (depth[v], v));

    let mut sigma = vec![0.0; n];
    sigma[source] = 1.0;
    for &v in &order[1..] {
        sigma[v] = preds[v].iter().map(|&p| sigma[p]).sum();
    }

    ShortestPathDag {
        source,
        dist,
        sigma,
        preds,
        order,
    }
}

/// One DAG per source, in source order.
pub fn all_pairs_dags(g: &Graph, costs: &CostVector) -> Result<Vec<ShortestPathDag>, RoutingError> {
    check_len(g.node_count(), costs.len())?;
    let c = costs.as_slice();
    Ok((0..g.node_count())
        .into_par_iter()
        .map(|s| dag_unchecked(g, c, s))
        .collect())
}

/// Centralities under one cost vector plus a hash of the tied-path structure
/// they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityReport {
    /// Unnormalised betweenness, unordered pairs.
    pub kappa: Vec<f64>,
    /// `kappa / max(kappa)`, or all zeros when the max is 0.
    pub normalized: Vec<f64>,
    pub signature: u64,
}

impl CentralityReport {
    pub fn peak(&self) -> f64 {
        self.kappa.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_id", "kappa", "normalized"])?;
        for (i, (k, c)) in self.kappa.iter().zip(&self.normalized).enumerate() {
            w.write_record([i.to_string(), k.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn betweenness(g: &Graph, costs: &CostVector) -> Result<CentralityReport, RoutingError> {
    let dags = all_pairs_dags(g, costs)?;
    Ok(betweenness_from_dags(&dags))
}

/// Brandes accumulation over precomputed per-source DAGs. `dags[s]` must be
/// the DAG rooted at `s`.
pub fn betweenness_from_dags(dags: &[ShortestPathDag]) -> CentralityReport {
    let n = dags.len();
    let partials: Vec<Vec<f64>> = dags.par_iter().map(source_dependencies).collect();
    let mut kappa = vec![0.0; n];
    for delta in &partials {
        for (k, d) in kappa.iter_mut().zip(delta) {
            *k += d;
        }
    }
    for k in &mut kappa {
        *k *= 0.5;
    }
    let normalized = normalize_unchecked(&kappa);
    CentralityReport {
        kappa,
        normalized,
        signature: path_signature(dags),
    }
}

fn source_dependencies(dag: &ShortestPathDag) -> Vec<f64> {
    let mut delta = vec![0.0; dag.dist.len()];
    for &w in dag.order.iter().rev() {
        let coeff = (1.0 + delta[w]) / dag.sigma[w];
        for &p in &dag.preds[w] {
            delta[p] += dag.sigma[p] * coeff;
        }
    }
    delta[dag.source] = 0.0;
    delta
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn absorb(h: u64, x: u64) -> u64 {
    splitmix64(h ^ splitmix64(x))
}

/// Hash of every source's predecessor lists. Per-source hashes are combined
/// with a wrapping sum, so the result does not depend on source order.
pub fn path_signature(dags: &[ShortestPathDag]) -> u64 {
    const NODE_TAG: u64 = 1 << 63;
    dags.iter()
        .map(|dag| {
            let mut h = splitmix64(dag.source as u64);
            for (v, ps) in dag.preds.iter().enumerate() {
                h = absorb(h, NODE_TAG | v as u64);
                for &p in ps {
                    h = absorb(h, p as u64);
                }
            }
            splitmix64(h)
        })
        .fold(0u64, u64::wrapping_add)
}

/// Max-normalisation: divide by the maximum when it is positive, otherwise
/// return the zero vector.
pub fn normalize_centrality(kappa: &[f64]) -> Result<Vec<f64>, RoutingError> {
    if let Some((node, &value)) = kappa.iter().enumerate().find(|(_, &k)| !(k >= 0.0)) {
        return Err(RoutingError::NegativeCentrality { node, value });
    }
    Ok(normalize_unchecked(kappa))
}

fn normalize_unchecked(kappa: &[f64]) -> Vec<f64> {
    let max = kappa.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        kappa.iter().map(|k| k / max).collect()
    } else {
        vec![0.0; kappa.len()]
    }
}

/// The tie-broken route from `dag.source` to `target`: walk predecessors
/// back from the target taking the smallest id each time. `None` when the
/// target is unreachable.
pub fn select_route(dag: &ShortestPathDag, target: usize) -> Option<Vec<usize>> {
    if !dag.is_reachable(target) {
        return None;
    }
    let mut path = vec![target];
    let mut v = target;
    while v != dag.source {
        v = dag.preds[v][0];
        path.push(v);
    }
    path.reverse();
    Some(path)
}

/// Mean hop count of [`select_route`] over ordered reachable pairs `s != t`.
/// Returns 0 when no such pair exists.
pub fn mean_route_hops(g: &Graph, costs: &CostVector) -> Result<f64, RoutingError> {
    let dags = all_pairs_dags(g, costs)?;
    Ok(mean_route_hops_from_dags(&dags))
}

pub fn mean_route_hops_from_dags(dags: &[ShortestPathDag]) -> f64 {
    let (total, pairs) = dags
        .iter()
        .map(|dag| {
            let mut total = 0usize;
            let mut pairs = 0usize;
            for t in 0..dag.dist.len() {
                if t == dag.source {
                    continue;
                }
                if let Some(route) = select_route(dag, t) {
                    total += route.len() - 1;
                    pairs += 1;
                }
            }
            (total, pairs)
        })
        .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if pairs == 0 {
        0.0
    } else {
        total as f64 / pairs as f64
    }
}

/// Next-hop table: `next[at][dest]`. `None` on the diagonal and for
/// unreachable destinations.
///
/// Built per destination from the DAG rooted at `dest`: the next hop from
/// `at` is its smallest predecessor there, so every destination's routes
/// form an in-tree and each hop strictly lowers the remaining cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteTable {
    next: Vec<Vec<Option<usize>>>,
}

impl RouteTable {
    pub fn from_dags(dags: &[ShortestPathDag]) -> Self {
        let n = dags.len();
        let mut next = vec![vec![None; n]; n];
        for dag in dags {
            let dest = dag.source;
            for at in 0..n {
                if at != dest && dag.is_reachable(at) {
                    next[at][dest] = Some(dag.preds[at][0]);
                }
            }
        }
        RouteTable { next }
    }

    pub fn compute(g: &Graph, costs: &CostVector) -> Result<Self, RoutingError> {
        Ok(Self::from_dags(&all_pairs_dags(g, costs)?))
    }

    pub fn from_rows(next: Vec<Vec<Option<usize>>>) -> Self {
        RouteTable { next }
    }

    pub fn node_count(&self) -> usize {
        self.next.len()
    }

    pub fn next_hop(&self, at: usize, dest: usize) -> Option<usize> {
        self.next[at][dest]
    }

    pub fn rows(&self) -> &[Vec<Option<usize>>] {
        &self.next
    }

    /// Follows next hops from `source`; `None` if the destination is
    /// unreachable or the table loops.
    pub fn path(&self, source: usize, dest: usize) -> Option<Vec<usize>> {
        let mut path = vec![source];
        let mut at = source;
        while at != dest {
            at = self.next[at][dest]?;
            path.push(at);
            if path.len() > self.next.len() {
                return None;
            }
        }
        Some(path)
    }

    /// True when every reachable `(at, dest)` pair reaches `dest` without
    /// revisiting a node.
    pub fn is_loop_free(&self) -> bool {
        let n = self.next.len();
        (0..n).all(|s| {
            (0..n).all(|t| s == t || self.next[s][t].is_none() || self.path(s, t).is_some())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let edges = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v)));
        Graph::from_edges(n, edges).unwrap()
    }

    fn diamond() -> Graph {
        Graph::from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn dag_on_path() {
        let dag = shortest_path_dag(&path3(), &CostVector::uniform(3), 0).unwrap();
        assert_eq!(dag.dist, vec![1.0, 2.0, 3.0]);
        assert_eq!(dag.sigma, vec![1.0, 1.0, 1.0]);
        assert_eq!(dag.preds, vec![vec![], vec![0], vec![1]]);
    }

    #[test]
    fn dag_counts_ties_on_cycle() {
        let dag = shortest_path_dag(&cycle(4), &CostVector::uniform(4), 0).unwrap();
        assert_eq!(dag.sigma[2], 2.0);
        assert_eq!(dag.preds[2], vec![1, 3]);
    }

    #[test]
    fn dag_respects_node_costs() {
        let c = CostVector::new(vec![1.0, 1.0, 5.0, 1.0]).unwrap();
        let dag = shortest_path_dag(&diamond(), &c, 0).unwrap();
        assert_eq!(dag.dist[3], 3.0);
        assert_eq!(dag.sigma[3], 1.0);
        assert_eq!(select_route(&dag, 3).unwrap(), vec![0, 1, 3]);
    }

    #[test]
    fn near_ties_within_tolerance_merge() {
        let c = CostVector::new(vec![1.0, 2.0, 2.0 + 1e-12, 1.0]).unwrap();
        let dag = shortest_path_dag(&diamond(), &c, 0).unwrap();
        assert_eq!(dag.sigma[3], 2.0);
        let c = CostVector::new(vec![1.0, 2.0, 2.0 + 1e-6, 1.0]).unwrap();
        let dag = shortest_path_dag(&diamond(), &c, 0).unwrap();
        assert_eq!(dag.sigma[3], 1.0);
    }

    #[test]
    fn betweenness_examples() {
        let r = betweenness(&star(4), &CostVector::uniform(5)).unwrap();
        assert_eq!(r.kappa, vec![6.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.normalized, vec![1.0, 0.0, 0.0, 0.0, 0.0]);

        let r = betweenness(&cycle(5), &CostVector::uniform(5)).unwrap();
        assert_eq!(r.kappa, vec![1.0; 5]);

        let r = betweenness(&complete(4), &CostVector::uniform(4)).unwrap();
        assert_eq!(r.kappa, vec![0.0; 4]);
        assert_eq!(r.normalized, vec![0.0; 4]);
    }

    #[test]
    fn cycle4_splits_opposite_pairs() {
        let r = betweenness(&cycle(4), &CostVector::uniform(4)).unwrap();
        assert_eq!(r.kappa, vec![0.5; 4]);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(
            normalize_centrality(&[0.0, 6.0, 0.0]).unwrap(),
            vec![0.0, 1.0, 0.0]
        );
        assert_eq!(
            normalize_centrality(&[0.0, 0.0, 0.0]).unwrap(),
            vec![0.0; 3]
        );
        assert_eq!(normalize_centrality(&[2.0, 4.0]).unwrap(), vec![0.5, 1.0]);
        assert!(matches!(
            normalize_centrality(&[1.0, -0.5]),
            Err(RoutingError::NegativeCentrality { node: 1, .. })
        ));
    }

    #[test]
    fn route_selection_breaks_ties_by_id() {
        let dag = shortest_path_dag(&path3(), &CostVector::uniform(3), 0).unwrap();
        assert_eq!(select_route(&dag, 2).unwrap(), vec![0, 1, 2]);
        assert_eq!(select_route(&dag, 0).unwrap(), vec![0]);
        let dag = shortest_path_dag(&cycle(4), &CostVector::uniform(4), 0).unwrap();
        assert_eq!(select_route(&dag, 2).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn mean_hops_examples() {
        assert_eq!(
            mean_route_hops(&complete(4), &CostVector::uniform(4)).unwrap(),
            1.0
        );
        let p3 = mean_route_hops(&path3(), &CostVector::uniform(3)).unwrap();
        assert!((p3 - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn signature_tracks_structure_not_scale() {
        let g = diamond();
        let base = CostVector::new(vec![1.0, 1.0, 5.0, 1.0]).unwrap();
        let a = betweenness(&g, &base).unwrap();
        let b = betweenness(&g, &base.scaled(3.7)).unwrap();
        assert_eq!(a.signature, b.signature);
        assert_eq!(a.kappa, b.kappa);
        let flipped = CostVector::new(vec![1.0, 5.0, 1.0, 1.0]).unwrap();
        assert_ne!(a.signature, betweenness(&g, &flipped).unwrap().signature);
        let tied = betweenness(&g, &CostVector::uniform(4)).unwrap();
        assert_ne!(a.signature, tied.signature);
    }

    #[test]
    fn dimension_and_cost_checks() {
        assert!(matches!(
            betweenness(&path3(), &CostVector::uniform(4)),
            Err(RoutingError::DimensionMismatch {
                expected: 3,
                actual: 4
            })
        ));
        assert!(CostVector::new(vec![1.0, 0.5]).is_err());
        assert!(CostVector::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn route_table_on_complete_graph_is_direct() {
        let t = RouteTable::compute(&complete(4), &CostVector::uniform(4)).unwrap();
        for s in 0..4 {
            for d in 0..4 {
                let want = if s == d { None } else { Some(d) };
                assert_eq!(t.next_hop(s, d), want);
            }
        }
        assert!(t.is_loop_free());
    }

    #[test]
    fn route_table_on_disconnected_graph() {
        let g = star(4);
        let (broken, _) = g.without_nodes(&[0]);
        let t = RouteTable::compute(&broken, &CostVector::uniform(4)).unwrap();
        assert!(t.rows().iter().flatten().all(Option::is_none));
        let r = betweenness(&broken, &CostVector::uniform(4)).unwrap();
        assert_eq!(r.kappa, vec![0.0; 4]);
    }
}
