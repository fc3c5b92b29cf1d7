//! Independent brute-force oracles shared by the property and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use graphmem::molgraph::MolecularGraph;
use graphmem::numerics::Tensor;
use rand::Rng;

/// Random simple graph with at most `max_edges` edges; may be disconnected.
pub fn random_simple_graph<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize, relations: usize) -> MolecularGraph {
    let n = rng.gen_range(1..=max_nodes);
    let mut seen = BTreeSet::new();
    let mut bonds = Vec::new();
    let target = rng.gen_range(0..=max_edges);
    for _ in 0..4 * target {
        if bonds.len() == target || n < 2 {
            break;
        }
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && seen.insert((a.min(b), a.max(b))) {
            bonds.push((a, b, rng.gen_range(1..=relations)));
        }
    }
    MolecularGraph::new(vec!["C".into(); n], relations, &bonds).unwrap()
}

fn connected_without(graph: &MolecularGraph, skip: usize, from: usize, to: usize) -> bool {
    let mut seen = vec![false; graph.num_nodes()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        if u == to {
            return true;
        }
        for (e, edge) in graph.edges().iter().enumerate() {
            if e == skip {
                continue;
            }
            let v = if edge.source == u {
                edge.target
            } else if edge.target == u {
                edge.source
            } else {
                continue;
            };
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// An edge lies on a cycle iff its endpoints stay connected once it is removed.
pub fn ring_oracle(graph: &MolecularGraph) -> Vec<bool> {
    graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| connected_without(graph, e, edge.source, edge.target))
        .collect()
}

/// `rounds` rounds of `x_i ← mean_{j ~ i} x_j` over the edge list; isolated
/// nodes become zero.
pub fn mean_message_passing(graph: &MolecularGraph, x: &Tensor<f64>, rounds: usize) -> Tensor<f64> {
    let mut cur = x.clone();
    for _ in 0..rounds {
        let mut next = Tensor::zeros(cur.rows(), cur.cols());
        for i in 0..cur.rows() {
            let nbrs: Vec<usize> = graph
                .edges()
                .iter()
                .filter_map(|e| match (e.source == i, e.target == i) {
                    (true, _) => Some(e.target),
                    (_, true) => Some(e.source),
                    _ => None,
                })
                .collect();
            for k in 0..cur.cols() {
                let s: f64 = nbrs.iter().map(|&j| cur[(j, k)]).sum();
                next[(i, k)] = if nbrs.is_empty() { 0.0 } else { s / nbrs.len() as f64 };
            }
        }
        cur = next;
    }
    cur
}

/// Every ordered `k`-tuple of distinct nodes whose consecutive pairs (cyclically)
/// are joined by an edge of `relation`.
pub fn has_cycle_brute_force(graph: &MolecularGraph, k: usize, relation: usize) -> bool {
    let n = graph.num_nodes();
    let adjacent = |a: usize, b: usize| {
        graph
            .edges()
            .iter()
            .any(|e| e.relation == relation && ((e.source == a && e.target == b) || (e.source == b && e.target == a)))
    };
    fn rec(path: &mut Vec<usize>, n: usize, k: usize, adjacent: &dyn Fn(usize, usize) -> bool) -> bool {
        if path.len() == k {
            return adjacent(path[k - 1], path[0]);
        }
        for v in 0..n {
            if path.contains(&v) {
                continue;
            }
            if let Some(&last) = path.last() {
                if !adjacent(last, v) {
                    continue;
                }
            }
            path.push(v);
            if rec(path, n, k, adjacent) {
                return true;
            }
            path.pop();
        }
        false
    }
    rec(&mut Vec::new(), n, k, &adjacent)
}

/// Exact rational AUC by enumerating every (positive, negative) pair:
/// returns (2·correct + ties, 2·pairs).
pub fn auc_pairs(scores: &[f64], labels: &[u8]) -> (u64, u64) {
    let mut num = 0;
    let mut pairs = 0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1;
                if scores[i] > scores[j] {
                    num += 2;
                } else if scores[i] == scores[j] {
                    num += 1;
                }
            }
        }
    }
    (num, 2 * pairs)
}

/// F1 from explicitly counted decisions at threshold 0.5.
pub fn f1_counts(scores: &[f64], labels: &[u8]) -> f64 {
    let tp = (0..scores.len()).filter(|&i| scores[i] >= 0.5 && labels[i] == 1).count();
    let fp = (0..scores.len()).filter(|&i| scores[i] >= 0.5 && labels[i] == 0).count();
    let fn_ = (0..scores.len()).filter(|&i| scores[i] < 0.5 && labels[i] == 1).count();
    if tp == 0 {
        0.0
    } else {
        (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Shortest-path hop distances from `src` over all relations.
pub fn distances(graph: &MolecularGraph, src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; graph.num_nodes()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for v in graph.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(dist[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Simple graphs with up to `max_nodes` nodes and `max_edges` edges.
pub fn graph_strategy(max_nodes: usize, max_edges: usize, relations: usize) -> impl proptest::strategy::Strategy<Value = MolecularGraph> {
    use proptest::prelude::*;
    (1..=max_nodes).prop_flat_map(move |n| {
        proptest::collection::vec((0..n, 0..n, 1..=relations), 0..=max_edges).prop_map(move |raw| {
            let mut seen = BTreeSet::new();
            let bonds: Vec<_> = raw
                .into_iter()
                .filter(|&(a, b, _)| a != b && seen.insert((a.min(b), a.max(b))))
                .collect();
            MolecularGraph::new(vec!["C".into(); n], relations, &bonds).unwrap()
        })
    })
}

/// Uniformly random permutation of `0..n`.
pub fn permutation_strategy(n: usize) -> impl proptest::strategy::Strategy<Value = Vec<usize>> {
    use proptest::prelude::*;
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}
