// SPDX-License-Identifier: Apache-2.0

//! Palette diagram geometry and SVG emission.

pub mod color;
pub mod layout;
pub mod svg;

pub use color::{assign_colors, Rgb, BASE_PALETTE, RESIDUAL_GREY};
pub use layout::{heatmap_layout, streamgraph_layout, Band, BaselineMode, HeatmapGrid, PaletteLayout};
pub use svg::{emit_svg, Diagram, SvgStyle};
