// SPDX-License-Identifier: Apache-2.0

//! Alpha-divergences between group assignment distributions.
//!
//! For `alpha` outside `{0, 1}`:
//!
//! ```text
//! D_alpha(p || q) = (1 - sum_i p_i^alpha q_i^(1 - alpha)) / (alpha (1 - alpha))
//! ```
//!
//! with `D_1 = KL(p || q)` and `D_0 = KL(q || p)`. The sum is evaluated as
//! `-sum_i p_i expm1((1 - alpha) ln(q_i / p_i))`, which stays accurate as
//! `alpha` approaches 0 or 1.

use ndarray::Array2;
use rayon::prelude::*;

use crate::ensemble::{normalize, AssignmentMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Additive smoothing applied when a divergence would otherwise be infinite.
pub const SMOOTHING_EPS: f64 = 1e-12;

const DISTRIBUTION_TOL: f64 = 1e-9;

/// `D_alpha(p || q)` for two probability vectors.
pub fn alpha_divergence(p: &[f64], q: &[f64], alpha: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be finite, got {alpha}")));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    if p.len() != q.len() {
        return Err(Error::InvalidParameter(format!(
            "distributions have different lengths ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    Ok(divergence(p, q, alpha))
}

/// `KL(p || q)` in nats, smoothed on support mismatch.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    alpha_divergence(p, q, 1.0)
}

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} is empty")));
    }
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidParameter(format!("{name} has entry {v}; expected finite and >= 0")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::InvalidParameter(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

// Whether the divergence is infinite without smoothing: some p_i > 0 with
// q_i = 0 for alpha >= 1, or some q_i > 0 with p_i = 0 for alpha <= 0.
fn needs_smoothing(p: &[f64], q: &[f64], alpha: f64) -> bool {
    if alpha >= 1.0 {
        p.iter().zip(q).any(|(&a, &b)| a > 0.0 && b == 0.0)
    } else if alpha <= 0.0 {
        p.iter().zip(q).any(|(&a, &b)| b > 0.0 && a == 0.0)
    } else {
        false
    }
}

fn smooth(p: &[f64]) -> Vec<f64> {
    let n = p.len() as f64;
    p.iter().map(|v| (v + SMOOTHING_EPS) / (1.0 + n * SMOOTHING_EPS)).collect()
}

pub(crate) fn divergence(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    if needs_smoothing(p, q, alpha) {
        let (ps, qs) = (smooth(p), smooth(q));
        return divergence_finite(&ps, &qs, alpha);
    }
    divergence_finite(p, q, alpha)
}

fn divergence_finite(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    if alpha == 1.0 {
        return kl(p, q);
    }
    if alpha == 0.0 {
        return kl(q, p);
    }
    let beta = 1.0 - alpha;
    let mut deficit = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            // p_i - p_i^alpha q_i^beta
            deficit -= pi * (beta * (qi.ln() - pi.ln())).exp_m1();
        }
    }
    deficit / (alpha * beta)
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum()
}

/// Pairwise divergences between the normalized rows of an assignment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceMatrix {
    entries: Array2<f64>,
    alpha: f64,
    symmetrized: bool,
}

impl DivergenceMatrix {
    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn symmetrized(&self) -> bool {
        self.symmetrized
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Wrap a precomputed matrix. Used by tests and callers holding their own kernels.
    pub fn from_entries(entries: Array2<f64>, alpha: f64, symmetrized: bool) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidParameter("divergence matrix must be square".into()));
        }
        if entries.iter().any(|v| !v.is_finite() || *v < -1e-12) {
            return Err(Error::InvalidParameter("divergence entries must be finite and nonnegative".into()));
        }
        if symmetrized && entries != entries.t() {
            return Err(Error::InvalidParameter("matrix flagged symmetrized is not symmetric".into()));
        }
        Ok(DivergenceMatrix {
            entries,
            alpha,
            symmetrized,
        })
    }
}

/// Build the `M0 x M0` divergence matrix over the rows of `m`.
///
/// Entries are computed independently in parallel, so the result does not
/// depend on the worker count.
pub fn divergence_matrix(m: &AssignmentMatrix, alpha: f64, symmetrize: bool) -> Result<DivergenceMatrix> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be finite, got {alpha}")));
    }
    let rows: Vec<Vec<f64>> = m
        .entries()
        .rows()
        .into_iter()
        .enumerate()
        .map(|(g, r)| normalize(r).ok_or(Error::EmptyGroup { group: g }))
        .collect::<Result<_>>()?;
    let n = rows.len();
    let flat: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            let rows = &rows;
            (0..n).map(move |b| if a == b { 0.0 } else { divergence(&rows[a], &rows[b], alpha) })
        })
        .collect();
    let mut entries = Array2::from_shape_vec((n, n), flat).expect("square");
    if symmetrize {
        for a in 0..n {
            for b in (a + 1)..n {
                let s = 0.5 * (entries[[a, b]] + entries[[b, a]]);
                entries[[a, b]] = s;
                entries[[b, a]] = s;
            }
        }
    }
    if let Some(v) = entries.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite divergence {v} at alpha = {alpha}")));
    }
    Ok(DivergenceMatrix {
        entries,
        alpha,
        symmetrized: symmetrize,
    })
}
