// SPDX-License-Identifier: Apache-2.0

//! Exact t-SNE on a precomputed distance matrix.
//!
//! Conditional affinities use `exp(-beta_i d_ij^2)` with `beta_i` bisected so
//! that the entropy of row `i` equals `ln(perplexity)`. Optimization is plain
//! gradient descent with momentum and per-coordinate gains, early
//! exaggeration for the first iterations, and a seeded Gaussian start.

use ndarray::{Array2, Axis};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{rng_for, STAGE_TSNE};

pub const EXAGGERATION: f64 = 12.0;
pub const EXAGGERATION_ITERATIONS: usize = 250;
pub const INITIAL_MOMENTUM: f64 = 0.5;
pub const FINAL_MOMENTUM: f64 = 0.8;
pub const INIT_SCALE: f64 = 1e-4;
pub const ENTROPY_TOL: f64 = 1e-5;
const BISECTION_STEPS: usize = 200;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 10.0,
            iterations: 1000,
            learning_rate: 100.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Embedding2D {
    /// `P x 2` coordinates.
    pub coords: Array2<f64>,
    pub final_kl: f64,
    /// `KL(P || Q)` when early exaggeration ends.
    pub kl_after_exaggeration: f64,
    pub params: TsneParams,
}

/// Largest perplexity accepted for `p` points.
pub fn max_perplexity(p: usize) -> f64 {
    (p as f64 - 1.0) / 3.0
}

fn check_inputs(d: &Array2<f64>, perplexity: f64) -> Result<()> {
    if !d.is_square() {
        return Err(Error::InvalidParameter("t-SNE distance matrix must be square".into()));
    }
    let p = d.nrows();
    if p < 3 {
        return Err(Error::InvalidParameter(format!("t-SNE needs at least 3 points, got {p}")));
    }
    if !perplexity.is_finite() || perplexity < 1.0 || perplexity > max_perplexity(p) {
        return Err(Error::InvalidParameter(format!(
            "perplexity {perplexity} infeasible for {p} points; must lie in [1, {:.4}]",
            max_perplexity(p)
        )));
    }
    if let Some(v) = d.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("t-SNE distances must be finite, found {v}")));
    }
    Ok(())
}

// One row of conditional affinities P_{.|i} for precision beta.
fn conditional_row(sq: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let mut z = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, o)) in sq.iter().zip(out.iter_mut()).enumerate() {
        if j == i {
            *o = 0.0;
            continue;
        }
        let w = (-beta * d).exp();
        *o = w;
        z += w;
        weighted += w * d;
    }
    out.iter_mut().for_each(|o| *o /= z);
    // Entropy in nats.
    z.ln() + beta * weighted / z
}

/// Row-conditional affinities `P_{j|i}`; each row sums to 1.
pub fn conditional_probabilities(d: &Array2<f64>, perplexity: f64) -> Result<Array2<f64>> {
    check_inputs(d, perplexity)?;
    let p = d.nrows();
    let target = perplexity.ln();
    let rows: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let min = (0..p)
                .filter(|&j| j != i)
                .map(|j| d[[i, j]] * d[[i, j]])
                .fold(f64::INFINITY, f64::min);
            // Shift by the nearest squared distance; the row normalization cancels it.
            let sq: Vec<f64> = (0..p).map(|j| d[[i, j]] * d[[i, j]] - min).collect();
            let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
            let mut beta = 1.0;
            let mut row = vec![0.0; p];
            let mut best: Option<(f64, f64)> = None;
            for _ in 0..BISECTION_STEPS {
                let h = conditional_row(&sq, i, beta, &mut row);
                let err = (h - target).abs();
                if best.is_none_or(|(e, _)| err < e) {
                    best = Some((err, beta));
                }
                if err < ENTROPY_TOL {
                    return row;
                }
                if h > target {
                    lo = beta;
                    beta = if hi.is_infinite() { beta * 2.0 } else { 0.5 * (beta + hi) };
                } else {
                    hi = beta;
                    beta = 0.5 * (beta + lo);
                }
            }
            let (err, beta) = best.expect("at least one step");
            log::warn!("t-SNE bandwidth for point {i} misses the target entropy by {err:.3e}");
            conditional_row(&sq, i, beta, &mut row);
            row
        })
        .collect();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((p, p), flat).expect("square"))
}

/// Joint affinities `(P_{j|i} + P_{i|j}) / 2P`; sums to 1.
pub fn joint_probabilities(d: &Array2<f64>, perplexity: f64) -> Result<Array2<f64>> {
    let cond = conditional_probabilities(d, perplexity)?;
    let p = cond.nrows() as f64;
    Ok((&cond + &cond.t()) / (2.0 * p))
}

fn student_kernel(y: &Array2<f64>) -> (Array2<f64>, f64) {
    let p = y.nrows();
    let rows: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|i| {
            (0..p)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let dx = y[[i, 0]] - y[[j, 0]];
                        let dy = y[[i, 1]] - y[[j, 1]];
                        1.0 / (1.0 + dx * dx + dy * dy)
                    }
                })
                .collect()
        })
        .collect();
    let z: f64 = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    (Array2::from_shape_vec((p, p), flat).expect("square"), z)
}

/// `KL(P || Q(Y))` for a joint affinity matrix `p` and layout `y` (`P x 2`).
pub fn kl_objective(p: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let (num, z) = student_kernel(y);
    let mut kl = 0.0;
    for ((i, j), &pij) in p.indexed_iter() {
        if i != j && pij > 0.0 {
            let q = (num[[i, j]] / z).max(f64::MIN_POSITIVE);
            kl += pij * (pij / q).ln();
        }
    }
    kl
}

/// Gradient of [`kl_objective`] with respect to `y`.
pub fn kl_gradient(p: &Array2<f64>, y: &Array2<f64>) -> Array2<f64> {
    let (num, z) = student_kernel(y);
    let n = y.nrows();
    let rows: Vec<[f64; 2]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[[i, j]];
                let coef = 4.0 * (p[[i, j]] - w / z) * w;
                g[0] += coef * (y[[i, 0]] - y[[j, 0]]);
                g[1] += coef * (y[[i, 1]] - y[[j, 1]]);
            }
            g
        })
        .collect();
    Array2::from_shape_fn((n, 2), |(i, c)| rows[i][c])
}

/// Exact t-SNE of a `P x P` distance matrix into two dimensions.
pub fn tsne_embed(distances: &Array2<f64>, params: &TsneParams) -> Result<Embedding2D> {
    if !params.learning_rate.is_finite() || params.learning_rate <= 0.0 {
        return Err(Error::InvalidParameter("t-SNE learning rate must be positive".into()));
    }
    let p = joint_probabilities(distances, params.perplexity)?;
    let n = p.nrows();
    let mut rng = rng_for(params.seed, STAGE_TSNE, 0);
    let mut y = Array2::from_shape_fn((n, 2), |_| {
        let z: f64 = StandardNormal.sample(&mut rng);
        INIT_SCALE * z
    });
    let mut velocity = Array2::<f64>::zeros((n, 2));
    let mut gains = Array2::<f64>::ones((n, 2));
    let exaggerated = &p * EXAGGERATION;
    let mut kl_after_exaggeration = None;

    for it in 0..params.iterations {
        let target = if it < EXAGGERATION_ITERATIONS { &exaggerated } else { &p };
        let grad = kl_gradient(target, &y);
        let momentum = if it < EXAGGERATION_ITERATIONS { INITIAL_MOMENTUM } else { FINAL_MOMENTUM };
        for ((g, v), gain) in grad.iter().zip(velocity.iter_mut()).zip(gains.iter_mut()) {
            *gain = if (*g > 0.0) != (*v > 0.0) { *gain + 0.2 } else { *gain * 0.8 };
            *gain = gain.max(MIN_GAIN);
            *v = momentum * *v - params.learning_rate * *gain * g;
        }
        y += &velocity;
        let mean = y.mean_axis(Axis(0)).expect("non-empty");
        y -= &mean;
        if it + 1 == EXAGGERATION_ITERATIONS {
            kl_after_exaggeration = Some(kl_objective(&p, &y));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("t-SNE diverged to non-finite coordinates".into()));
    }
    let final_kl = kl_objective(&p, &y).max(0.0);
    Ok(Embedding2D {
        coords: y,
        final_kl,
        kl_after_exaggeration: kl_after_exaggeration.map_or(final_kl, |k| k.max(0.0)),
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_distances(p: usize) -> Array2<f64> {
        Array2::from_shape_fn((p, p), |(i, j)| (i as f64 - j as f64).abs())
    }

    #[test]
    fn affinities_are_normalized() {
        let d = line_distances(12);
        let c = conditional_probabilities(&d, 3.0).unwrap();
        for r in c.rows() {
            assert!((r.sum() - 1.0).abs() < 1e-9);
        }
        let j = joint_probabilities(&d, 3.0).unwrap();
        assert!((j.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn perplexity_matches_target_entropy() {
        let d = line_distances(20);
        let c = conditional_probabilities(&d, 5.0).unwrap();
        for r in c.rows() {
            let h: f64 = r.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
            assert!((h - 5.0f64.ln()).abs() < 1e-5);
        }
    }

    #[test]
    fn infeasible_perplexity_and_bad_input() {
        let d = line_distances(10);
        assert!(tsne_embed(&d, &TsneParams { perplexity: 3.5, ..TsneParams::default() }).is_err());
        assert!(tsne_embed(&line_distances(2), &TsneParams { perplexity: 1.0, ..TsneParams::default() }).is_err());
        let mut bad = d.clone();
        bad[[0, 1]] = f64::NAN;
        assert!(tsne_embed(&bad, &TsneParams { perplexity: 2.0, ..TsneParams::default() }).is_err());
    }

    #[test]
    fn seeded_runs_repeat() {
        let d = line_distances(10);
        let params = TsneParams {
            perplexity: 3.0,
            iterations: 300,
            ..TsneParams::default()
        };
        let a = tsne_embed(&d, &params).unwrap();
        let b = tsne_embed(&d, &params).unwrap();
        assert_eq!(a.coords, b.coords);
        assert!(a.final_kl <= a.kl_after_exaggeration);
    }
}
