// SPDX-License-Identifier: Apache-2.0

//! Classical (Torgerson) MDS with a power-iteration eigensolver.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MdsEmbedding {
    /// `N x dims` coordinates.
    pub coords: Array2<f64>,
    pub eigenvalues: Vec<f64>,
    /// Set when every input distance was zero.
    pub degenerate: bool,
}

/// `B = -1/2 J D^2 J` with `J = I - 11^T / N`.
pub fn double_center(d: &Array2<f64>) -> Array2<f64> {
    let n = d.nrows();
    let sq = d.mapv(|v| v * v);
    let row_means: Vec<f64> = sq.rows().into_iter().map(|r| r.sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    Array2::from_shape_fn((n, n), |(i, j)| -0.5 * (sq[[i, j]] - row_means[i] - row_means[j] + grand))
}

fn start_vector(n: usize) -> Array1<f64> {
    // Deterministic, non-constant (the constant vector lies in ker B).
    let v = Array1::from_shape_fn(n, |i| ((i as f64 + 1.0) * 0.754_877_666).sin() + 0.5 * ((i * i) as f64 * 0.1).cos());
    let norm = v.dot(&v).sqrt();
    v / norm
}

// Dominant eigenpair of (B - sum_p l_p u_p u_p^T + shift I) by power iteration.
fn power_iteration(
    b: &Array2<f64>,
    found: &[(f64, Array1<f64>)],
    shift: f64,
    scale: f64,
) -> Result<(f64, Array1<f64>)> {
    let apply = |v: &Array1<f64>| {
        let mut w = b.dot(v);
        for (lambda, u) in found {
            let c = lambda * u.dot(v);
            w.scaled_add(-c, u);
        }
        if shift != 0.0 {
            w.scaled_add(shift, v);
        }
        w
    };
    let mut v = start_vector(b.nrows());
    for (_, u) in found {
        let c = u.dot(&v);
        v.scaled_add(-c, u);
    }
    let norm = v.dot(&v).sqrt();
    if norm == 0.0 {
        return Ok((0.0, v));
    }
    v /= norm;
    for _ in 0..POWER_MAX_ITERATIONS {
        let w = apply(&v);
        let wn = w.dot(&w).sqrt();
        // Remaining spectrum is numerically zero.
        if wn <= 1e-12 * scale && shift == 0.0 {
            return Ok((0.0, v));
        }
        let next = w / wn;
        let plus = (&next - &v).mapv(|x| x * x).sum().sqrt();
        let minus = (&next + &v).mapv(|x| x * x).sum().sqrt();
        v = next;
        if plus.min(minus) < POWER_TOL {
            let rayleigh = v.dot(&apply(&v));
            return Ok((rayleigh - shift, v));
        }
    }
    // Near-degenerate leading eigenvalues: keep the last iterate, which lies
    // close to the leading eigenspace.
    log::warn!("power iteration did not converge within {POWER_MAX_ITERATIONS} iterations");
    let rayleigh = v.dot(&apply(&v));
    Ok((rayleigh - shift, v))
}

// Largest algebraic eigenpair of the deflated operator.
fn top_eigenpair(b: &Array2<f64>, found: &[(f64, Array1<f64>)], scale: f64) -> Result<(f64, Array1<f64>)> {
    let (lambda, v) = power_iteration(b, found, 0.0, scale)?;
    if lambda >= -POWER_TOL * scale {
        return Ok((lambda, v));
    }
    // Dominant magnitude is negative: shift so the top algebraic one dominates.
    power_iteration(b, found, -lambda, scale)
}

fn fix_sign(v: &mut Array1<f64>) {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

fn check_distances(d: &Array2<f64>) -> Result<()> {
    if !d.is_square() || d.nrows() == 0 {
        return Err(Error::InvalidParameter("distance matrix must be square and non-empty".into()));
    }
    let n = d.nrows();
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..n {
        if d[[i, i]] != 0.0 {
            return Err(Error::InvalidParameter(format!("distance matrix has nonzero diagonal at {i}")));
        }
        for j in 0..n {
            let v = d[[i, j]];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("distance [{i}][{j}] = {v}")));
            }
            if (v - d[[j, i]]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidParameter(format!("distance matrix is not symmetric at [{i}][{j}]")));
            }
        }
    }
    Ok(())
}

/// Embed a distance matrix into `dims` (1 or 2) dimensions.
pub fn classical_mds(d: &Array2<f64>, dims: usize) -> Result<MdsEmbedding> {
    if !(1..=2).contains(&dims) {
        return Err(Error::InvalidParameter(format!("dims must be 1 or 2, got {dims}")));
    }
    check_distances(d)?;
    let n = d.nrows();
    if d.iter().all(|&v| v == 0.0) {
        return Ok(MdsEmbedding {
            coords: Array2::zeros((n, dims)),
            eigenvalues: vec![0.0; dims],
            degenerate: true,
        });
    }
    let b = double_center(d);
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut found: Vec<(f64, Array1<f64>)> = Vec::with_capacity(dims);
    let mut coords = Array2::zeros((n, dims));
    for k in 0..dims {
        let (lambda, mut v) = top_eigenpair(&b, &found, scale)?;
        if k == 0 && lambda <= 0.0 {
            return Err(Error::Numerical(format!("leading MDS eigenvalue {lambda} is not positive")));
        }
        fix_sign(&mut v);
        if lambda > 0.0 {
            let s = lambda.sqrt();
            coords.column_mut(k).assign(&v.mapv(|x| x * s));
        }
        found.push((lambda, v));
    }
    Ok(MdsEmbedding {
        coords,
        eigenvalues: found.iter().map(|(l, _)| *l).collect(),
        degenerate: false,
    })
}
