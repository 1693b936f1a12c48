//! Pairwise Euclidean distances, kNN graph construction, and geodesic
//! (curvilinear) distance approximation via shortest paths on the graph.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use ordered_float::OrderedFloat;
use rayon::prelude::*;

use crate::error::{MdsError, Result};
use crate::types::{DataMatrix, DistanceMatrix, Scale};

/// Symmetric weighted neighbour graph over `n` points. Edge weights are RAW
/// Euclidean distances; `(i, j)` present implies `(j, i)` present with the
/// same weight, and there are no self-loops.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    /// Node count.
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Neighbours of node `i` as `(index, weight)` pairs, ascending by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub(crate) fn from_adjacency(adjacency: Vec<Vec<(usize, f64)>>) -> Self {
        Self { adjacency }
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }
}

/// Pairwise Euclidean distances between the columns of `x`, RAW or SQUARED
/// per the requested scale. Only the upper triangle is computed, so the
/// result is exactly symmetric.
pub fn pairwise_euclidean(x: &DataMatrix, scale: Scale) -> DistanceMatrix {
    let n = x.len();
    let m = x.values();
    let mut d = DMatrix::zeros(n, n);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
                let sq = (m.column(i) - m.column(j)).norm_squared();
                *slot = match scale {
                    Scale::Raw => sq.sqrt(),
                    Scale::Squared => sq,
                };
            }
            row
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate().skip(i + 1) {
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    DistanceMatrix::new(d, scale).expect("construction is symmetric and nonnegative")
}

/// k-nearest-neighbour graph of a RAW distance matrix. Each node picks its
/// `k` nearest others (ties broken by lower index), then the directed picks
/// are symmetrized by union.
pub fn knn_graph(d: &DistanceMatrix, k: usize) -> Result<NeighborGraph> {
    if d.scale() != Scale::Raw {
        return Err(MdsError::ScaleMismatch {
            expected: Scale::Raw.name(),
            found: d.scale().name(),
        });
    }
    let n = d.len();
    if k == 0 || k > n.saturating_sub(1) {
        return Err(MdsError::InvalidK { k, n });
    }
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            d.get(i, a)
                .partial_cmp(&d.get(i, b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            let w = d.get(i, j);
            if !adjacency[i].iter().any(|&(v, _)| v == j) {
                adjacency[i].push((j, w));
            }
            if !adjacency[j].iter().any(|&(v, _)| v == i) {
                adjacency[j].push((i, w));
            }
        }
    }
    for nbrs in &mut adjacency {
        nbrs.sort_by_key(|&(j, _)| j);
    }
    Ok(NeighborGraph::from_adjacency(adjacency))
}

/// Single-source shortest-path lengths over nonnegative edge weights.
/// `None` entries are unreachable nodes.
pub(crate) fn dijkstra(graph: &NeighborGraph, source: usize) -> Vec<Option<f64>> {
    let n = graph.len();
    let mut dist: Vec<Option<f64>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((OrderedFloat(0.0f64), source)));
    while let Some(Reverse((OrderedFloat(du), u))) = heap.pop() {
        match dist[u] {
            Some(best) if du > best => continue,
            Some(_) => continue, // already settled at equal distance
            None => dist[u] = Some(du),
        }
        for &(v, w) in graph.neighbors(u) {
            let cand = du + w;
            if dist[v].is_none_or(|best| cand < best) {
                heap.push(Reverse((OrderedFloat(cand), v)));
            }
        }
    }
    dist
}

/// All-pairs shortest-path (geodesic) distances over the neighbour graph,
/// one Dijkstra run per source, sources fanned out over worker threads.
///
/// A disconnected graph is a loud error carrying the component partition;
/// we never emit infinite entries.
pub fn geodesic_distances(graph: &NeighborGraph) -> Result<DistanceMatrix> {
    let n = graph.len();
    if n == 0 {
        return Err(MdsError::InvalidMatrix("empty neighbour graph".into()));
    }
    let rows: Vec<Vec<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|s| dijkstra(graph, s))
        .collect();
    if rows[0].iter().any(|d| d.is_none()) {
        return Err(MdsError::Disconnected {
            components: graph.components(),
        });
    }
    let mut d = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let v = v.ok_or_else(|| MdsError::Disconnected {
                components: graph.components(),
            })?;
            d[(i, j)] = v;
        }
    }
    // Dijkstra rows are independently rounded; enforce exact symmetry.
    for i in 0..n {
        d[(i, i)] = 0.0;
        for j in (i + 1)..n {
            let v = 0.5 * (d[(i, j)] + d[(j, i)]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    DistanceMatrix::new(d, Scale::Raw)
}
