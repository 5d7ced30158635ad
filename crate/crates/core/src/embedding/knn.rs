// SPDX-License-Identifier: Apache-2.0

//! Symmetric kNN graph and all-pairs geodesic distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Geodesics {
    pub distances: Array2<f64>,
    /// Edges added to connect kNN components, as `(i, j, length)`.
    pub bridges: Vec<(usize, usize, f64)>,
}

fn euclid(points: &ArrayView2<'_, f64>, i: usize, j: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(points.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

#[derive(PartialEq)]
struct Visit {
    dist: f64,
    node: usize,
}

impl Eq for Visit {}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Visit { dist: 0.0, node: source });
    while let Some(Visit { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            let nd = d + w;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(Visit { dist: nd, node: next });
            }
        }
    }
    dist
}

/// Geodesic distances over the symmetric kNN graph of `points` (one point per row).
///
/// Disconnected components are joined by the single shortest Euclidean edge
/// between two different components, repeated until the graph is connected.
pub fn knn_geodesics(points: ArrayView2<'_, f64>, k: usize) -> Result<Geodesics> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 points, got {n}")));
    }
    if k < 1 || k >= n {
        return Err(Error::InvalidParameter(format!("neighbor count k = {k} must satisfy 1 <= k < {n}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("points must be finite".into()));
    }

    let neighbors: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (euclid(&points, i, j), j)).collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
            cand.sort_unstable_by(cmp);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    let mut edges: Vec<(usize, usize)> = neighbors
        .iter()
        .enumerate()
        .flat_map(|(i, nb)| nb.iter().map(move |&j| (i.min(j), i.max(j))))
        .collect();
    edges.sort_unstable();
    edges.dedup();

    let mut dsu = Dsu::new(n);
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j) in &edges {
        let w = euclid(&points, i, j);
        adj[i].push((j, w));
        adj[j].push((i, w));
        dsu.union(i, j);
    }

    let mut bridges = Vec::new();
    loop {
        let comp: Vec<usize> = (0..n).map(|i| dsu.find(i)).collect();
        if comp.iter().all(|&c| c == comp[0]) {
            break;
        }
        let best = (0..n)
            .into_par_iter()
            .filter_map(|i| {
                ((i + 1)..n)
                    .filter(|&j| comp[i] != comp[j])
                    .map(|j| (euclid(&points, i, j), i, j))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))))
            .expect("at least two components");
        let (w, i, j) = best;
        adj[i].push((j, w));
        adj[j].push((i, w));
        dsu.union(i, j);
        bridges.push((i, j, w));
    }

    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(&adj, s)).collect();
    let mut distances = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = rows[i][j].min(rows[j][i]);
            distances[[i, j]] = d;
            distances[[j, i]] = d;
        }
    }
    Ok(Geodesics { distances, bridges })
}
