// SPDX-License-Identifier: Apache-2.0

//! Vertex ordering by 1D Isomap over the columns of an assignment matrix.

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use super::knn::knn_geodesics;
use super::mds::classical_mds;
use crate::ensemble::AssignmentMatrix;
use crate::error::{Error, Result};

/// A permutation of vertex indices: `permutation[pos]` is the vertex shown at `pos`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawOrder", into = "RawOrder")]
pub struct VertexOrder {
    permutation: Vec<usize>,
    source: String,
}

#[derive(Serialize, Deserialize)]
struct RawOrder {
    permutation: Vec<usize>,
    source: String,
}

impl TryFrom<RawOrder> for VertexOrder {
    type Error = Error;

    fn try_from(raw: RawOrder) -> Result<Self> {
        VertexOrder::new(raw.permutation, raw.source)
    }
}

impl From<VertexOrder> for RawOrder {
    fn from(o: VertexOrder) -> Self {
        RawOrder {
            permutation: o.permutation,
            source: o.source,
        }
    }
}

impl VertexOrder {
    pub fn new(permutation: Vec<usize>, source: impl Into<String>) -> Result<Self> {
        let n = permutation.len();
        let mut seen = vec![false; n];
        for &v in &permutation {
            if v >= n || seen[v] {
                return Err(Error::Validation(format!("vertex order is not a permutation of 0..{n}")));
            }
            seen[v] = true;
        }
        Ok(VertexOrder {
            permutation,
            source: source.into(),
        })
    }

    pub fn identity(n: usize, source: impl Into<String>) -> Self {
        VertexOrder {
            permutation: (0..n).collect(),
            source: source.into(),
        }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    /// Same permutation under a different source tag.
    pub fn relabeled(&self, source: impl Into<String>) -> Self {
        VertexOrder {
            permutation: self.permutation.clone(),
            source: source.into(),
        }
    }
}

/// Default neighbor count: `max(10, ceil(ln N))`, capped at `N - 1`.
pub fn default_knn(n: usize) -> usize {
    let k = 10usize.max((n as f64).ln().ceil() as usize);
    k.min(n.saturating_sub(1)).max(1)
}

fn sort_by_coordinate(coords: &[f64], negate: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..coords.len()).collect();
    let key = |i: usize| if negate { -coords[i] } else { coords[i] };
    idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    idx
}

/// Canonical order from 1D coordinates.
///
/// Both orientations are sorted (ties by original index); the one that puts
/// vertex 0 in the first half wins, and when both or neither do, the
/// lexicographically smaller permutation wins. The result is unchanged when
/// all coordinates are negated.
pub fn order_from_coordinates(coords: &[f64], source: impl Into<String>) -> VertexOrder {
    let n = coords.len();
    let fwd = sort_by_coordinate(coords, false);
    let rev = sort_by_coordinate(coords, true);
    let first_half = |p: &[usize]| p.iter().position(|&v| v == 0).is_some_and(|pos| 2 * pos < n);
    let permutation = match (first_half(&fwd), first_half(&rev)) {
        (true, false) => fwd,
        (false, true) => rev,
        _ => fwd.min(rev),
    };
    VertexOrder {
        permutation,
        source: source.into(),
    }
}

/// Order the vertices (columns of `m`) by their 1D Isomap coordinate.
pub fn isomap_order(m: &AssignmentMatrix, k: usize, source: impl Into<String>) -> Result<VertexOrder> {
    let n = m.n_vertices();
    if k < 1 {
        return Err(Error::InvalidParameter("neighbor count must be at least 1".into()));
    }
    if n < 2 {
        return Ok(VertexOrder::identity(n, source));
    }
    let points = m.entries().t();
    let geo = knn_geodesics(points, k.min(n - 1))?;
    let emb = classical_mds(&geo.distances, 1)?;
    let coords: Vec<f64> = emb.coords.index_axis(Axis(1), 0).to_vec();
    Ok(order_from_coordinates(&coords, source))
}

/// Permute the columns of `m` into `order`.
pub fn apply_order(order: &VertexOrder, m: &AssignmentMatrix) -> Result<AssignmentMatrix> {
    if order.len() != m.n_vertices() {
        return Err(Error::Validation(format!(
            "vertex order has {} entries but the matrix has {} vertices",
            order.len(),
            m.n_vertices()
        )));
    }
    Ok(m.with_entries(m.entries().select(Axis(1), order.permutation())))
}
