// SPDX-License-Identifier: Apache-2.0

//! Streamgraph (1D) and heatmap (2D) layouts of an ordered assignment matrix.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::color::{assign_colors, Rgb};
use crate::embedding::VertexOrder;
use crate::ensemble::AssignmentMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    Zero,
    #[default]
    Symmetric,
    Wiggle,
}

impl FromStr for BaselineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(BaselineMode::Zero),
            "symmetric" => Ok(BaselineMode::Symmetric),
            "wiggle" => Ok(BaselineMode::Wiggle),
            other => Err(Error::InvalidParameter(format!(
                "unknown baseline '{other}'; expected zero, symmetric or wiggle"
            ))),
        }
    }
}

impl fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineMode::Zero => "zero",
            BaselineMode::Symmetric => "symmetric",
            BaselineMode::Wiggle => "wiggle",
        })
    }
}

/// Lower and upper boundary of one band at every vertex position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Band {
    pub fn height(&self, pos: usize) -> f64 {
        self.upper[pos] - self.lower[pos]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteLayout {
    pub order: VertexOrder,
    pub bands: Vec<Band>,
    pub baseline: Vec<f64>,
    pub colors: Vec<Rgb>,
    pub labels: Vec<String>,
    pub scale: f64,
    /// Optional grey band for assignment mass not covered by the shown groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<Band>,
}

impl PaletteLayout {
    pub fn n_positions(&self) -> usize {
        self.baseline.len()
    }

    pub fn total_height(&self, pos: usize) -> f64 {
        self.bands.iter().map(|b| b.height(pos)).sum()
    }

    pub fn with_colors(mut self, colors: Vec<Rgb>) -> Self {
        assert_eq!(colors.len(), self.bands.len(), "one color per band");
        self.colors = colors;
        self
    }

    /// Stack a residual band of the given heights on top of the groups.
    pub fn with_residual(mut self, heights: &[f64]) -> Self {
        let n = self.n_positions();
        assert_eq!(heights.len(), n, "one residual height per position");
        let lower: Vec<f64> = (0..n)
            .map(|i| self.bands.last().map_or(self.baseline[i], |b| b.upper[i]))
            .collect();
        let upper = lower.iter().zip(heights).map(|(l, h)| l + h.max(0.0)).collect();
        self.residual = Some(Band { lower, upper });
        self
    }
}

// Weighted-wiggle offsets, accumulated left to right from zero.
fn wiggle_baseline(heights: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut base = vec![0.0; n];
    let mut y = 0.0;
    for j in 1..n {
        let mut total = 0.0;
        let mut weighted = 0.0;
        for (g, h) in heights.iter().enumerate() {
            let mut slope = (h[j] - h[j - 1]) / 2.0;
            for below in &heights[..g] {
                slope += below[j] - below[j - 1];
            }
            total += h[j];
            weighted += slope * h[j];
        }
        if total > 0.0 {
            y -= weighted / total;
        }
        base[j] = y;
    }
    base
}

/// Streamgraph layout of `m`, whose columns are already in `order`.
///
/// Band heights are `p_{g,i} / scale`; bands are stacked in row order above
/// the baseline at every position.
pub fn streamgraph_layout(
    m: &AssignmentMatrix,
    order: &VertexOrder,
    mode: BaselineMode,
    scale: f64,
) -> Result<PaletteLayout> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    let n = m.n_vertices();
    if order.len() != n {
        return Err(Error::Validation(format!(
            "order covers {} vertices, matrix has {n}",
            order.len()
        )));
    }
    let heights: Vec<Vec<f64>> = m
        .entries()
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v / scale).collect())
        .collect();
    let baseline = match mode {
        BaselineMode::Zero => vec![0.0; n],
        BaselineMode::Symmetric => (0..n).map(|i| -0.5 * heights.iter().map(|h| h[i]).sum::<f64>()).collect(),
        BaselineMode::Wiggle => wiggle_baseline(&heights, n),
    };
    let mut cursor = baseline.clone();
    let bands = heights
        .iter()
        .map(|h| {
            let lower = cursor.clone();
            for (c, v) in cursor.iter_mut().zip(h) {
                *c += v;
            }
            Band {
                lower,
                upper: cursor.clone(),
            }
        })
        .collect::<Vec<_>>();
    Ok(PaletteLayout {
        order: order.clone(),
        colors: assign_colors(bands.len(), 0),
        labels: m.labels().iter().map(ToString::to_string).collect(),
        bands,
        baseline,
        scale,
        residual: None,
    })
}

/// Heatmap cells: opacity of group `g` at position `i` is `p_{g,i}` clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub order: VertexOrder,
    pub opacity: Array2<f64>,
    pub colors: Vec<Rgb>,
    pub labels: Vec<String>,
}

pub fn heatmap_layout(m: &AssignmentMatrix, order: &VertexOrder) -> Result<HeatmapGrid> {
    if order.len() != m.n_vertices() {
        return Err(Error::Validation(format!(
            "order covers {} vertices, matrix has {}",
            order.len(),
            m.n_vertices()
        )));
    }
    Ok(HeatmapGrid {
        order: order.clone(),
        opacity: m.entries().mapv(|v| v.clamp(0.0, 1.0)),
        colors: assign_colors(m.n_groups(), 0),
        labels: m.labels().iter().map(ToString::to_string).collect(),
    })
}
