// SPDX-License-Identifier: Apache-2.0

//! Quality diagnostics surfaced in reports. None of them gate a run.

use ndarray::Array2;

use crate::ensemble::AssignmentMatrix;

pub const CONTIGUITY_THRESHOLD: f64 = 0.5;

/// Per group, the number of extra runs of positions where the group's
/// assignment reaches `threshold`. A group whose strong vertices form one
/// contiguous block (or that has none) scores 0.
///
/// `m` must already be column-ordered.
pub fn contiguity_breaks(m: &AssignmentMatrix, threshold: f64) -> Vec<usize> {
    m.entries()
        .rows()
        .into_iter()
        .map(|row| {
            let mut runs = 0usize;
            let mut inside = false;
            for &v in row {
                let hit = v >= threshold;
                if hit && !inside {
                    runs += 1;
                }
                inside = hit;
            }
            runs.saturating_sub(1)
        })
        .collect()
}

/// Mean silhouette coefficient of `labels` under the distance matrix `d`.
///
/// Points alone in their cluster score 0. Returns `None` with fewer than two
/// clusters or fewer than two points.
pub fn silhouette(d: &Array2<f64>, labels: &[usize]) -> Option<f64> {
    let n = labels.len();
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    if n < 2 || k < 2 || d.dim() != (n, n) {
        return None;
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return None;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += d[[i, j]];
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Some(total / n as f64)
}

/// Euclidean distance matrix between the rows of `points`.
pub fn euclidean_distances(points: &Array2<f64>) -> Array2<f64> {
    let n = points.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| {
        points
            .row(i)
            .iter()
            .zip(points.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    })
}
