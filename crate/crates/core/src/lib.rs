// SPDX-License-Identifier: Apache-2.0

//! Palette diagrams for ensembles of network partitions.
//!
//! An ensemble of soft or hard partitions of one vertex set is stacked into a
//! single assignment matrix, redundant groups are filtered by clustering the
//! groups under an alpha-divergence, vertices are ordered by a 1D Isomap
//! embedding, and the result is drawn as a streamgraph (1D) and a heatmap (2D).

pub mod diagnostics;
pub mod divergence;
pub mod embedding;
pub mod ensemble;
pub mod error;
pub mod filter;
pub mod pipeline;
pub mod render;
pub mod seed;
pub mod service;
pub mod synth;

pub use error::{Error, Result};
