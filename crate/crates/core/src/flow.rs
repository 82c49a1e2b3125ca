//! Max-flow feasibility of a supply vector on a small undirected network.
//!
//! Used to certify optimality: at a candidate solution, the part of the
//! gradient that must be absorbed by fused pairs is a set of node supplies,
//! and the fused pairs are edges with capacity `λ·w`. A valid subgradient
//! exists exactly when the supplies can be routed.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Edge `(a, b, capacity)` between nodes `a` and `b`; usable in both directions.
pub type Edge = (usize, usize, f64);

/// Maximum flow from `source` to `sink` (Edmonds-Karp on a dense residual matrix).
pub fn max_flow(nodes: usize, capacity: &mut [Vec<f64>], source: usize, sink: usize) -> f64 {
    let mut total = 0.0;
    let mut parent = vec![usize::MAX; nodes];
    loop {
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        parent[source] = source;
        let mut queue = VecDeque::new();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            if u == sink {
                break;
            }
            for v in 0..nodes {
                if parent[v] == usize::MAX && capacity[u][v] > 0.0 {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            return total;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = sink;
        while v != source {
            let u = parent[v];
            bottleneck = bottleneck.min(capacity[u][v]);
            v = u;
        }
        let mut v = sink;
        while v != source {
            let u = parent[v];
            capacity[u][v] -= bottleneck;
            capacity[v][u] += bottleneck;
            v = u;
        }
        total += bottleneck;
    }
}

/// Whether `supply` (positive = source, negative = sink) can be routed through
/// `edges` without exceeding any capacity, up to an absolute slack `tol`.
pub fn supplies_routable(supply: &[f64], edges: &[Edge], tol: f64) -> bool {
    let n = supply.len();
    let imbalance: f64 = supply.iter().sum();
    if imbalance.abs() > tol {
        return false;
    }
    let positive: f64 = supply.iter().filter(|s| **s > 0.0).sum();
    if positive <= tol {
        return true;
    }
    let (src, snk) = (n, n + 1);
    let mut cap = vec![vec![0.0; n + 2]; n + 2];
    for &(a, b, c) in edges {
        cap[a][b] += c;
        cap[b][a] += c;
    }
    for (i, &s) in supply.iter().enumerate() {
        if s > 0.0 {
            cap[src][i] = s;
        } else if s < 0.0 {
            cap[i][snk] = -s;
        }
    }
    let flow = max_flow(n + 2, &mut cap, src, snk);
    flow >= positive - tol
}
