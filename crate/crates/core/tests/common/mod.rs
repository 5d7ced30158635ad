// SPDX-License-Identifier: Apache-2.0

//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;

/// Normalized mutual information with arithmetic-mean normalization.
pub fn nmi(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![vec![0.0; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        joint[x][y] += 1.0;
    }
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum::<f64>() / n).collect();
    let pb: Vec<f64> = (0..kb).map(|j| joint.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let h = |p: &[f64]| -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>();
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let pij = joint[i][j] / n;
            if pij > 0.0 {
                mi += pij * (pij / (pa[i] * pb[j])).ln();
            }
        }
    }
    let denom = 0.5 * (h(&pa) + h(&pb));
    if denom == 0.0 {
        1.0
    } else {
        mi / denom
    }
}

/// Column-wise argmax of a row-major matrix given as rows.
pub fn argmax_labels(rows: &[Vec<f64>]) -> Vec<usize> {
    let n = rows[0].len();
    (0..n)
        .map(|i| {
            let mut best = 0;
            for g in 1..rows.len() {
                if rows[g][i] > rows[best][i] {
                    best = g;
                }
            }
            best
        })
        .collect()
}

/// Number of maximal runs of equal consecutive values.
pub fn runs(labels: &[usize]) -> usize {
    if labels.is_empty() {
        return 0;
    }
    1 + labels.windows(2).filter(|w| w[0] != w[1]).count()
}

pub fn random_distribution<R: Rng>(rng: &mut R, n: usize, strictly_positive: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            if !strictly_positive && rng.random::<f64>() < 0.2 {
                0.0
            } else {
                x + if strictly_positive { 1e-3 } else { 0.0 }
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Direct KL(p || q) in nats over the support of p.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum()
}

/// Top eigenpairs of the double-centered squared distances by a dense
/// symmetric eigensolve; coordinates are `v * sqrt(lambda)`.
pub fn dense_mds(d: &Array2<f64>, dims: usize) -> Vec<Vec<f64>> {
    let n = d.nrows();
    let sq = nalgebra::DMatrix::from_fn(n, n, |i, j| d[[i, j]] * d[[i, j]]);
    let j = nalgebra::DMatrix::<f64>::identity(n, n) - nalgebra::DMatrix::from_element(n, n, 1.0 / n as f64);
    let b = -0.5 * &j * sq * &j;
    let eig = nalgebra::SymmetricEigen::new(b);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    idx.iter()
        .take(dims)
        .map(|&k| {
            let lam = eig.eigenvalues[k].max(0.0);
            (0..n).map(|i| eig.eigenvectors[(i, k)] * lam.sqrt()).collect()
        })
        .collect()
}

/// sRGB hex to CIE L*a*b* (D65).
pub fn lab(rgb: (u8, u8, u8)) -> [f64; 3] {
    let lin = |c: u8| {
        let c = f64::from(c) / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    };
    let (r, g, b) = (lin(rgb.0), lin(rgb.1), lin(rgb.2));
    let x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    let f = |t: f64| {
        if t > 216.0 / 24389.0 {
            t.cbrt()
        } else {
            (24389.0 / 27.0 * t + 16.0) / 116.0
        }
    };
    let (fx, fy, fz) = (f(x), f(y), f(z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn cie76(a: (u8, u8, u8), b: (u8, u8, u8)) -> f64 {
    let (p, q) = (lab(a), lab(b));
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

/// Within-cluster sum of squared distances to cluster means.
pub fn kmeans_objective(points: &[Vec<f64>], labels: &[usize], m: usize) -> f64 {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; m];
    let mut counts = vec![0usize; m];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| {
            p.iter()
                .zip(&sums[l])
                .map(|(v, s)| {
                    let c = s / counts[l] as f64;
                    (v - c) * (v - c)
                })
                .sum::<f64>()
        })
        .sum()
}

/// Mean silhouette, written out from the definition.
pub fn silhouette_oracle(d: &Array2<f64>, labels: &[usize]) -> f64 {
    let n = labels.len();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let mean_to = |c: usize| {
            let others: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == c).collect();
            if others.is_empty() {
                None
            } else {
                Some(others.iter().map(|&j| d[[i, j]]).sum::<f64>() / others.len() as f64)
            }
        };
        let Some(a) = mean_to(labels[i]) else { continue };
        let b = (0..k)
            .filter(|&c| c != labels[i])
            .filter_map(mean_to)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}
