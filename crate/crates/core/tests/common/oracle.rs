//! Brute-force reference for node-cost shortest paths: enumerate every
//! simple path between each pair, keep the minimum-cost ones, and split each
//! pair's unit of stress evenly among them.

#![allow(dead_code)]

use sra_core::routing::costs_tied;
use sra_core::{CostVector, Graph};

pub fn simple_paths(g: &Graph, s: usize, t: usize) -> Vec<Vec<usize>> {
    fn walk(
        g: &Graph,
        t: usize,
        path: &mut Vec<usize>,
        on: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let u = *path.last().expect("path starts at the source");
        if u == t {
            out.push(path.clone());
            return;
        }
        for &v in g.neighbors(u) {
            if !on[v] {
                on[v] = true;
                path.push(v);
                walk(g, t, path, on, out);
                path.pop();
                on[v] = false;
            }
        }
    }
    let mut on = vec![false; g.node_count()];
    on[s] = true;
    let mut out = Vec::new();
    walk(g, t, &mut vec![s], &mut on, &mut out);
    out
}

pub fn path_cost(path: &[usize], c: &CostVector) -> f64 {
    path.iter().map(|&v| c[v]).sum()
}

/// Minimum cost over all simple `s -> t` paths and the paths tied with it.
pub fn min_cost_paths(g: &Graph, c: &CostVector, s: usize, t: usize) -> (f64, Vec<Vec<usize>>) {
    let paths = simple_paths(g, s, t);
    let best = paths
        .iter()
        .map(|p| path_cost(p, c))
        .fold(f64::INFINITY, f64::min);
    let tied = paths
        .into_iter()
        .filter(|p| costs_tied(best, path_cost(p, c)))
        .collect();
    (best, tied)
}

/// Unordered-pair betweenness by enumeration.
pub fn brute_force_betweenness(g: &Graph, c: &CostVector) -> Vec<f64> {
    let n = g.node_count();
    let mut kappa = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let (_, tied) = min_cost_paths(g, c, s, t);
            if tied.is_empty() {
                continue;
            }
            let share = 1.0 / tied.len() as f64;
            for p in &tied {
                for &v in &p[1..p.len() - 1] {
                    kappa[v] += share;
                }
            }
        }
    }
    kappa
}

/// Connected graph on `n` nodes: node `i >= 1` hangs off `parents[i - 1] % i`,
/// then `extra[j]` adds the `j`-th pair `(a, b)`, `a < b`, in lexicographic
/// order.
pub fn connected_graph(n: usize, parents: &[usize], extra: &[bool]) -> Graph {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((parents[i - 1] % i, i));
    }
    let mut j = 0;
    for a in 0..n {
        for b in a + 1..n {
            if extra.get(j).copied().unwrap_or(false) && !edges.contains(&(a, b)) {
                edges.push((a, b));
            }
            j += 1;
        }
    }
    Graph::from_edges(n, edges).expect("tree plus extra edges is a valid connected graph")
}

pub fn star(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).expect("star")
}

pub fn cycle(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n))).expect("cycle")
}

/// A hub joined to every node of a ring, as in a wheel graph.
pub fn wheel(rim: usize) -> Graph {
    let spokes = (1..=rim).map(|v| (0, v));
    let ring = (1..=rim).map(|v| (v, v % rim + 1));
    Graph::from_edges(rim + 1, spokes.chain(ring)).expect("wheel")
}
