// SPDX-License-Identifier: Apache-2.0

//! Manifold-learning kernels: kNN geodesics and classical MDS (Isomap) for
//! ordering vertices, exact t-SNE for inspecting groups.

pub mod isomap;
pub mod knn;
pub mod mds;
pub mod tsne;

pub use isomap::{apply_order, default_knn, isomap_order, VertexOrder};
pub use knn::{knn_geodesics, Geodesics};
pub use mds::{classical_mds, MdsEmbedding};
pub use tsne::{tsne_embed, Embedding2D, TsneParams};
