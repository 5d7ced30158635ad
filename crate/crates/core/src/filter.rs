// SPDX-License-Identifier: Apache-2.0

//! Filtering of redundant groups: k-means over the rows of the symmetrized
//! divergence matrix, then one representative group per cluster.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::DivergenceMatrix;
use crate::embedding::tsne::{tsne_embed, Embedding2D, TsneParams};
use crate::ensemble::AssignmentMatrix;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, STAGE_KMEANS};

pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupClustering {
    /// Cluster index of every group, numbered by first appearance.
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub objective: f64,
    pub seed: u64,
    pub n_clusters: usize,
}

impl GroupClustering {
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (g, &c) in self.labels.iter().enumerate() {
            out[c].push(g);
        }
        out
    }
}

/// Feature vector of each group: its row of the symmetrized divergence matrix.
pub fn group_features(d: &DivergenceMatrix) -> Vec<Vec<f64>> {
    debug_assert!(d.symmetrized(), "features expect a symmetrized matrix");
    d.entries().rows().into_iter().map(|r| r.to_vec()).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Number of pairwise-distinct vectors (bitwise, with `-0.0 == 0.0`).
pub fn distinct_count(features: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = features
        .iter()
        .map(|f| f.iter().map(|&v| if v == 0.0 { 0 } else { v.to_bits() }).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// One Lloyd run with k-means++ seeding.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Objective after every centroid update; non-increasing.
    pub history: Vec<f64>,
}

impl LloydRun {
    pub fn objective(&self) -> f64 {
        self.history.last().copied().unwrap_or(0.0)
    }
}

fn kmeans_pp<R: Rng>(features: &[Vec<f64>], m: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = features.len();
    let mut centers = vec![features[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = features.iter().map(|f| sq_dist(f, &centers[0])).collect();
    while centers.len() < m {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // Every point coincides with a center; callers rule this out.
            rng.random_range(0..n)
        };
        let c = features[next].clone();
        for (w, f) in d2.iter_mut().zip(features) {
            *w = w.min(sq_dist(f, &c));
        }
        centers.push(c);
    }
    centers
}

fn nearest(f: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(f, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn update_centroids(features: &[Vec<f64>], labels: &[usize], m: usize) -> Vec<Vec<f64>> {
    let dim = features[0].len();
    let mut sums = vec![vec![0.0; dim]; m];
    let mut counts = vec![0usize; m];
    for (f, &c) in features.iter().zip(labels) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(f) {
            *s += v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            let inv = n as f64;
            s.iter_mut().for_each(|v| *v /= inv);
        }
    }
    sums
}

fn objective(features: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    features.iter().zip(labels).map(|(f, &c)| sq_dist(f, &centroids[c])).sum()
}

// Move the point farthest from its centroid into each empty cluster.
fn repair_empty(features: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let m = centroids.len();
    loop {
        let mut counts = vec![0usize; m];
        labels.iter().for_each(|&c| counts[c] += 1);
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return;
        };
        let mut far: Option<(usize, f64)> = None;
        for (i, f) in features.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(f, &centroids[labels[i]]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("more points than clusters");
        labels[i] = empty;
        centroids[empty] = features[i].clone();
    }
}

/// Single Lloyd run from k-means++ seeds drawn with `run_seed`.
pub fn lloyd_run(features: &[Vec<f64>], m: usize, run_seed: u64) -> LloydRun {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    let mut centroids = kmeans_pp(features, m, &mut rng);
    let mut labels: Vec<usize> = features.iter().map(|f| nearest(f, &centroids).0).collect();
    repair_empty(features, &mut labels, &mut centroids);
    let mut history = Vec::new();
    for iteration in 0..MAX_LLOYD_ITERATIONS {
        centroids = update_centroids(features, &labels, m);
        history.push(objective(features, &labels, &centroids));
        if iteration + 1 == MAX_LLOYD_ITERATIONS {
            break;
        }

        let mut changed = false;
        for (i, f) in features.iter().enumerate() {
            let current = sq_dist(f, &centroids[labels[i]]);
            let (c, d) = nearest(f, &centroids);
            if d < current && c != labels[i] {
                labels[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        repair_empty(features, &mut labels, &mut centroids);
    }
    LloydRun {
        labels,
        centroids,
        history,
    }
}

fn relabel_by_first_appearance(labels: &[usize], m: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; m];
    let mut next = 0;
    labels
        .iter()
        .map(|&c| {
            if map[c] == usize::MAX {
                map[c] = next;
                next += 1;
            }
            map[c]
        })
        .collect()
}

/// Best of `restarts` k-means++ / Lloyd runs by objective.
///
/// Restart `r` uses a sub-seed derived from `(seed, r)`, so the result is
/// independent of how restarts are scheduled across threads.
pub fn kmeans(features: &[Vec<f64>], m: usize, seed: u64, restarts: usize) -> Result<GroupClustering> {
    if m == 0 {
        return Err(Error::InvalidParameter("cluster count must be at least 1".into()));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    if features.is_empty() {
        return Err(Error::InvalidParameter("no groups to cluster".into()));
    }
    let available = distinct_count(features);
    if m > available {
        return Err(Error::TooManyClusters { requested: m, available });
    }
    let runs: Vec<LloydRun> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| lloyd_run(features, m, derive_seed(seed, STAGE_KMEANS, r)))
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.objective().total_cmp(&b.objective()).then(ia.cmp(ib)))
        .map(|(_, r)| r)
        .expect("restarts >= 1");
    Ok(GroupClustering {
        labels: relabel_by_first_appearance(&best.labels, m),
        objective: best.objective(),
        seed,
        n_clusters: m,
    })
}

/// Reduced assignment matrix: one representative row per cluster.
#[derive(Debug, Clone)]
pub struct ReducedAssignment {
    pub matrix: AssignmentMatrix,
    /// Original group index of each cluster's representative.
    pub representative_of: Vec<usize>,
    pub member_groups: Vec<Vec<usize>>,
}

/// Pick, per cluster, the member with the largest total mass (ties to the
/// lowest group index). Rows come out in cluster order.
pub fn select_representatives(stacked: &AssignmentMatrix, clustering: &GroupClustering) -> ReducedAssignment {
    let masses = stacked.row_masses();
    let member_groups = clustering.members();
    let representative_of: Vec<usize> = member_groups
        .iter()
        .map(|members| {
            let mut best = members[0];
            for &g in &members[1..] {
                if masses[g] > masses[best] {
                    best = g;
                }
            }
            best
        })
        .collect();
    ReducedAssignment {
        matrix: stacked.select_rows(&representative_of),
        representative_of,
        member_groups,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub group: usize,
    pub x: f64,
    pub y: f64,
    pub cluster: usize,
}

/// 2D t-SNE of the groups from a divergence matrix, tagged with cluster labels.
pub fn inspect_clusters(
    d: &DivergenceMatrix,
    clustering: &GroupClustering,
    params: &TsneParams,
) -> Result<(Vec<GroupPoint>, Embedding2D)> {
    if clustering.labels.len() != d.len() {
        return Err(Error::InvalidParameter(format!(
            "clustering covers {} groups, divergence matrix {}",
            clustering.labels.len(),
            d.len()
        )));
    }
    let emb = tsne_embed(d.entries(), params)?;
    let points = emb
        .coords
        .rows()
        .into_iter()
        .zip(&clustering.labels)
        .enumerate()
        .map(|(group, (row, &cluster))| GroupPoint {
            group,
            x: row[0],
            y: row[1],
            cluster,
        })
        .collect();
    Ok((points, emb))
}
