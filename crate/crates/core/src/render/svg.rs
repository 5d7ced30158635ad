// SPDX-License-Identifier: Apache-2.0

//! Deterministic SVG 1.1 output. Every coordinate is printed with four
//! decimals so identical layouts always produce identical bytes.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::color::RESIDUAL_GREY;
use super::layout::{Band, HeatmapGrid, PaletteLayout};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub legend: bool,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            width: 960.0,
            height: 400.0,
            margin: 24.0,
            legend: true,
        }
    }
}

const LEGEND_WIDTH: f64 = 160.0;
const LEGEND_ROW: f64 = 16.0;

pub enum Diagram<'a> {
    Streamgraph(&'a PaletteLayout),
    Heatmap(&'a HeatmapGrid),
}

pub fn emit_svg(diagram: Diagram<'_>, style: &SvgStyle) -> Result<String> {
    match diagram {
        Diagram::Streamgraph(l) => streamgraph_svg(l, style),
        Diagram::Heatmap(h) => heatmap_svg(h, style),
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_owned()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

fn frame(style: &SvgStyle) -> Result<Frame> {
    let legend = if style.legend { LEGEND_WIDTH } else { 0.0 };
    let width = style.width - 2.0 * style.margin - legend;
    let height = style.height - 2.0 * style.margin;
    if !(style.width > 0.0 && style.height > 0.0) || !(width > 0.0 && height > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "canvas {}x{} with margin {} leaves no drawing area",
            style.width, style.height, style.margin
        )));
    }
    Ok(Frame {
        left: style.margin,
        top: style.margin,
        width,
        height,
    })
}

fn header(out: &mut String, style: &SvgStyle, class: &str) {
    let _ = writeln!(
        out,
        r##"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" class="{class}" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect class="background" x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##,
        w = num(style.width),
        h = num(style.height),
    );
}

fn legend(out: &mut String, style: &SvgStyle, colors: &[String], labels: &[String]) {
    if !style.legend {
        return;
    }
    let x = style.width - style.margin - LEGEND_WIDTH + 12.0;
    out.push_str("<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n");
    for (i, (c, l)) in colors.iter().zip(labels).enumerate() {
        let y = style.margin + i as f64 * LEGEND_ROW;
        let _ = writeln!(
            out,
            r#"<g class="legend-entry"><rect x="{}" y="{}" width="10.0000" height="10.0000" fill="{c}"/><text x="{}" y="{}">{}</text></g>"#,
            num(x),
            num(y),
            num(x + 14.0),
            num(y + 9.0),
            escape(l)
        );
    }
    out.push_str("</g>\n");
}

fn band_path(band: &Band, xs: &[(f64, f64, f64)], ymap: &dyn Fn(f64) -> f64) -> String {
    let n = band.upper.len();
    let mut d = String::new();
    // Upper edge left to right, lower edge right to left; each position spans its slot.
    for (i, &(l, _, r)) in xs.iter().enumerate().take(n) {
        let y = num(ymap(band.upper[i]));
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{},{y} L{},{y} ", num(l), num(r));
    }
    for i in (0..n).rev() {
        let (l, _, r) = xs[i];
        let y = num(ymap(band.lower[i]));
        let _ = write!(d, "L{},{y} L{},{y} ", num(r), num(l));
    }
    d.push('Z');
    d
}

fn streamgraph_svg(layout: &PaletteLayout, style: &SvgStyle) -> Result<String> {
    let f = frame(style)?;
    let n = layout.n_positions();
    let slot = if n > 0 { f.width / n as f64 } else { f.width };
    let xs: Vec<(f64, f64, f64)> = (0..n)
        .map(|i| {
            let l = f.left + i as f64 * slot;
            (l, l + 0.5 * slot, l + slot)
        })
        .collect();

    let all_bands = layout.bands.iter().chain(layout.residual.as_ref());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for b in all_bands.clone() {
        lo = b.lower.iter().chain(&b.upper).fold(lo, |a, &v| a.min(v));
        hi = b.lower.iter().chain(&b.upper).fold(hi, |a, &v| a.max(v));
    }
    for &v in &layout.baseline {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() || hi - lo <= 0.0 {
        let mid = if lo.is_finite() { lo } else { 0.0 };
        lo = mid - 0.5;
        hi = mid + 0.5;
    }
    let ymap = |v: f64| f.top + (hi - v) / (hi - lo) * f.height;

    let mut out = String::new();
    header(&mut out, style, "palette-1d");
    out.push_str("<g class=\"bands\" stroke=\"none\">\n");
    for (g, band) in layout.bands.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<path class="band" data-group="{g}" fill="{}" d="{}"><title>{}</title></path>"#,
            layout.colors[g].hex(),
            band_path(band, &xs, &ymap),
            escape(&layout.labels[g])
        );
    }
    if let Some(res) = &layout.residual {
        let _ = writeln!(
            out,
            r#"<path class="residual" fill="{}" d="{}"/>"#,
            RESIDUAL_GREY.hex(),
            band_path(res, &xs, &ymap)
        );
    }
    out.push_str("</g>\n");
    let colors: Vec<String> = layout.colors.iter().map(|c| c.hex()).collect();
    legend(&mut out, style, &colors, &layout.labels);
    out.push_str("</svg>\n");
    Ok(out)
}

fn heatmap_svg(grid: &HeatmapGrid, style: &SvgStyle) -> Result<String> {
    let f = frame(style)?;
    let (rows, cols) = grid.opacity.dim();
    let cw = if cols > 0 { f.width / cols as f64 } else { f.width };
    let rh = if rows > 0 { f.height / rows as f64 } else { f.height };
    let mut out = String::new();
    header(&mut out, style, "palette-2d");
    out.push_str("<g class=\"cells\" stroke=\"none\">\n");
    for g in 0..rows {
        let _ = writeln!(
            out,
            r#"<g class="heatmap-row" data-group="{g}" fill="{}"><title>{}</title>"#,
            grid.colors[g].hex(),
            escape(&grid.labels[g])
        );
        let y = num(f.top + g as f64 * rh);
        let (w, h) = (num(cw), num(rh));
        for i in 0..cols {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{y}" width="{w}" height="{h}" fill-opacity="{}"/>"#,
                num(f.left + i as f64 * cw),
                num(grid.opacity[[g, i]])
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n");
    let colors: Vec<String> = grid.colors.iter().map(|c| c.hex()).collect();
    legend(&mut out, style, &colors, &grid.labels);
    out.push_str("</svg>\n");
    Ok(out)
}
