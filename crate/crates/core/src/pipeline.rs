// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs: stack, filter, sort, lay out and render.
//!
//! A [`PipelineReport`] holds everything needed to redraw both diagrams, and
//! serializes deterministically. Wall-clock timings live next to it in
//! [`PipelineOutput`] so that identical inputs give identical report bytes.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{contiguity_breaks, euclidean_distances, silhouette, CONTIGUITY_THRESHOLD};
use crate::divergence::{divergence_matrix, DivergenceMatrix, DEFAULT_ALPHA};
use crate::embedding::tsne::max_perplexity;
use crate::embedding::{apply_order, default_knn, isomap_order, TsneParams, VertexOrder};
use crate::ensemble::{AssignmentMatrix, GroupLabel, PartitionEnsemble};
use crate::error::{Error, Result};
use crate::filter::{group_features, inspect_clusters, kmeans, select_representatives, GroupPoint, DEFAULT_RESTARTS};
use crate::render::{
    assign_colors, emit_svg, heatmap_layout, streamgraph_layout, BaselineMode, Diagram, HeatmapGrid, PaletteLayout, Rgb,
    SvgStyle,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Divisor applied to band heights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// `L` without filtering, 1 with filtering.
    #[default]
    Auto,
    Unit,
    /// Number of partitions `L`.
    Partitions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_perplexity")]
    pub perplexity: f64,
    #[serde(default = "default_tsne_iterations")]
    pub iterations: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        let d = TsneParams::default();
        TsneConfig {
            enabled: true,
            perplexity: d.perplexity,
            iterations: d.iterations,
            learning_rate: d.learning_rate,
        }
    }
}

/// Where the vertex order comes from when it is not computed on the reduced matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderSource {
    /// An explicit permutation, usually taken from another report.
    Permutation {
        permutation: Vec<usize>,
        #[serde(default)]
        source: String,
    },
    /// Isomap order of one partition of the same ensemble.
    Partition { name: String },
    /// The order of a stored analysis; only the service can resolve this.
    Analysis { ensemble_id: String, config_hash: String },
}

impl OrderSource {
    pub fn from_order(order: &VertexOrder) -> Self {
        OrderSource::Permutation {
            permutation: order.permutation().to_vec(),
            source: order.source().to_owned(),
        }
    }
}

fn yes() -> bool {
    true
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}
fn default_perplexity() -> f64 {
    TsneParams::default().perplexity
}
fn default_tsne_iterations() -> usize {
    TsneParams::default().iterations
}
fn default_learning_rate() -> f64 {
    TsneParams::default().learning_rate
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Target group count `M`.
    pub m: usize,
    #[serde(default)]
    pub knn_k: Option<usize>,
    #[serde(default)]
    pub baseline: BaselineMode,
    #[serde(default)]
    pub tsne: TsneConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub order_from: Option<OrderSource>,
    #[serde(default = "yes")]
    pub filtering: bool,
    #[serde(default = "yes")]
    pub sorting: bool,
    #[serde(default)]
    pub scale: ScaleMode,
    /// Draw the mass of filtered-out groups as a grey band on top.
    #[serde(default)]
    pub residual_band: bool,
    #[serde(default)]
    pub style: SvgStyle,
}

impl PipelineConfig {
    pub fn new(m: usize) -> Self {
        PipelineConfig {
            alpha: DEFAULT_ALPHA,
            m,
            knn_k: None,
            baseline: BaselineMode::default(),
            tsne: TsneConfig::default(),
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            order_from: None,
            filtering: true,
            sorting: true,
            scale: ScaleMode::default(),
            residual_band: false,
            style: SvgStyle::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be finite, got {}", self.alpha)));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        if self.knn_k == Some(0) {
            return Err(Error::InvalidParameter("knn_k must be at least 1".into()));
        }
        let t = &self.tsne;
        if !t.perplexity.is_finite() || t.perplexity < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "t-SNE perplexity must be at least 1, got {}",
                t.perplexity
            )));
        }
        if !t.learning_rate.is_finite() || t.learning_rate <= 0.0 {
            return Err(Error::InvalidParameter("t-SNE learning rate must be positive".into()));
        }
        let s = &self.style;
        if !(s.width.is_finite() && s.height.is_finite() && s.margin.is_finite() && s.margin >= 0.0) {
            return Err(Error::InvalidParameter("style dimensions must be finite".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical config JSON.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    /// Row index in the stacked matrix.
    pub index: usize,
    pub partition: String,
    pub local: usize,
    pub mass: f64,
    pub cluster: Option<usize>,
    pub representative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringRecord {
    pub n_clusters: usize,
    pub objective: f64,
    pub seed: u64,
    pub restarts: usize,
    pub members: Vec<Vec<usize>>,
    pub representatives: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneRecord {
    pub requested_perplexity: f64,
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub points: Vec<GroupPoint>,
    pub final_kl: f64,
    pub kl_after_exaggeration: f64,
}

/// Rows drawn in the diagrams, in original vertex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedRecord {
    /// Stacked row index of each drawn row.
    pub groups: Vec<usize>,
    pub labels: Vec<String>,
    pub colors: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub contiguity_threshold: f64,
    /// Extra runs per drawn row under the final vertex order.
    pub contiguity_breaks: Vec<usize>,
    pub total_contiguity_breaks: usize,
    /// Silhouette of the k-means labels under the divergence matrix.
    pub group_silhouette: Option<f64>,
    /// Silhouette of the k-means labels in the t-SNE plane.
    pub tsne_silhouette: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema_version: u32,
    pub config: PipelineConfig,
    pub config_hash: String,
    pub ensemble_id: String,
    pub n_vertices: usize,
    pub n_partitions: usize,
    pub vertex_names: Option<Vec<String>>,
    pub groups: Vec<GroupRecord>,
    pub dropped_groups: Vec<GroupLabel>,
    pub clustering: Option<ClusteringRecord>,
    pub vertex_order: VertexOrder,
    pub tsne: Option<TsneRecord>,
    pub reduced: ReducedRecord,
    pub full_column_sums: Vec<f64>,
    pub scale: f64,
    pub diagnostics: DiagnosticsRecord,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        let found = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Parse("report has no integer schema_version".into()))?;
        if found != u64::from(SCHEMA_VERSION) {
            return Err(Error::SchemaMismatch {
                expected: SCHEMA_VERSION,
                found: u32::try_from(found).unwrap_or(u32::MAX),
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    /// Reduced matrix in original vertex order.
    pub fn reduced_matrix(&self) -> Result<AssignmentMatrix> {
        let r = &self.reduced;
        let n = self.n_vertices;
        if r.rows.iter().any(|row| row.len() != n) || r.groups.len() != r.rows.len() {
            return Err(Error::Validation("report rows do not match its vertex count".into()));
        }
        let flat: Vec<f64> = r.rows.iter().flatten().copied().collect();
        let entries = Array2::from_shape_vec((r.rows.len(), n), flat).expect("checked shape");
        let labels = r
            .groups
            .iter()
            .map(|&g| {
                self.groups
                    .get(g)
                    .map(|rec| GroupLabel {
                        partition: rec.partition.clone(),
                        local: rec.local,
                    })
                    .ok_or_else(|| Error::Validation(format!("report row refers to unknown group {g}")))
            })
            .collect::<Result<Vec<_>>>()?;
        AssignmentMatrix::new(entries, labels)
    }
}

pub fn save_report(path: &Path, report: &PipelineReport) -> Result<()> {
    fs::write(path, report.to_json())?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<PipelineReport> {
    PipelineReport::from_json(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
    /// Served from the divergence cache.
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
}

impl Timings {
    pub fn stage(&self, name: &str) -> Option<&StageTiming> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    pub svg_1d: String,
    pub svg_2d: String,
    pub timings: Timings,
}

/// Streamgraph and heatmap geometry from a report, without recomputing any analysis.
pub fn report_layouts(report: &PipelineReport) -> Result<(PaletteLayout, HeatmapGrid)> {
    let reduced = report.reduced_matrix()?;
    let order = &report.vertex_order;
    let ordered = apply_order(order, &reduced)?;
    let colors = report
        .reduced
        .colors
        .iter()
        .map(|c| Rgb::from_hex(c).ok_or_else(|| Error::Validation(format!("bad color '{c}' in report"))))
        .collect::<Result<Vec<_>>>()?;
    if colors.len() != reduced.n_groups() {
        return Err(Error::Validation("report needs one color per drawn row".into()));
    }
    let mut layout =
        streamgraph_layout(&ordered, order, report.config.baseline, report.scale)?.with_colors(colors.clone());
    if report.config.residual_band {
        if report.full_column_sums.len() != report.n_vertices {
            return Err(Error::Validation("report column sums do not match its vertex count".into()));
        }
        let heights: Vec<f64> = (0..layout.n_positions())
            .map(|pos| {
                let v = order.permutation()[pos];
                (report.full_column_sums[v] / report.scale - layout.total_height(pos)).max(0.0)
            })
            .collect();
        layout = layout.with_residual(&heights);
    }
    let mut grid = heatmap_layout(&ordered, order)?;
    grid.colors = colors;
    Ok((layout, grid))
}

/// Both diagrams from a report: `(1D streamgraph, 2D heatmap)`.
pub fn render_report(report: &PipelineReport) -> Result<(String, String)> {
    let (layout, grid) = report_layouts(report)?;
    let style = &report.config.style;
    Ok((
        emit_svg(Diagram::Streamgraph(&layout), style)?,
        emit_svg(Diagram::Heatmap(&grid), style)?,
    ))
}

/// Divergence matrices keyed by ensemble id and alpha.
#[derive(Debug, Default)]
pub struct DivergenceCache {
    map: Mutex<HashMap<(String, u64), Arc<DivergenceMatrix>>>,
}

impl DivergenceCache {
    /// Cached symmetrized matrix, computing it on a miss. The flag reports a hit.
    pub fn get_or_compute(
        &self,
        ensemble_id: &str,
        alpha: f64,
        m: &AssignmentMatrix,
    ) -> Result<(Arc<DivergenceMatrix>, bool)> {
        let key = (ensemble_id.to_owned(), alpha.to_bits());
        if let Some(d) = self.map.lock().expect("cache lock").get(&key) {
            return Ok((Arc::clone(d), true));
        }
        let d = Arc::new(divergence_matrix(m, alpha, true)?);
        let mut map = self.map.lock().expect("cache lock");
        let entry = map.entry(key).or_insert(d);
        Ok((Arc::clone(entry), false))
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.lock().expect("cache lock").clear();
    }
}

struct Laps {
    start: Instant,
    last: Instant,
    stages: Vec<StageTiming>,
}

impl Laps {
    fn new() -> Self {
        let now = Instant::now();
        Laps {
            start: now,
            last: now,
            stages: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str, cached: bool) {
        let now = Instant::now();
        self.stages.push(StageTiming {
            stage: stage.to_owned(),
            seconds: (now - self.last).as_secs_f64(),
            cached,
        });
        self.last = now;
    }

    fn finish(self) -> Timings {
        Timings {
            stages: self.stages,
            total_seconds: (self.last - self.start).as_secs_f64(),
        }
    }
}

/// Runs analyses, caching divergence matrices across calls.
#[derive(Debug, Default)]
pub struct Pipeline {
    cache: DivergenceCache,
}

impl Pipeline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cache(&self) -> &DivergenceCache {
        &self.cache
    }

    pub fn run(&self, e: &PartitionEnsemble, cfg: &PipelineConfig) -> Result<PipelineOutput> {
        self.run_with_id(e, &e.content_hash(), cfg)
    }

    /// As [`Pipeline::run`] with a precomputed ensemble id.
    pub fn run_with_id(&self, e: &PartitionEnsemble, ensemble_id: &str, cfg: &PipelineConfig) -> Result<PipelineOutput> {
        cfg.validate()?;
        let mut laps = Laps::new();

        let stacked = e.stack();
        for g in &stacked.dropped {
            log::warn!("dropping group {g}: all-zero assignment vector");
        }
        let full = stacked.matrix;
        if full.n_groups() == 0 {
            return Err(Error::Validation("every group is empty".into()).in_stage("stack"));
        }
        let masses = full.row_masses();
        let mut groups: Vec<GroupRecord> = full
            .labels()
            .iter()
            .zip(&masses)
            .enumerate()
            .map(|(index, (l, &mass))| GroupRecord {
                index,
                partition: l.partition.clone(),
                local: l.local,
                mass,
                cluster: None,
                representative: false,
            })
            .collect();
        laps.lap("stack", false);

        let mut clustering_record = None;
        let mut tsne_record = None;
        let mut group_silhouette = None;
        let mut tsne_silhouette = None;
        let reduced: AssignmentMatrix;
        let drawn: Vec<usize>;

        if cfg.filtering {
            let (d, hit) = self
                .cache
                .get_or_compute(ensemble_id, cfg.alpha, &full)
                .map_err(|err| err.in_stage("divergence"))?;
            laps.lap("divergence", hit);

            let features = group_features(&d);
            let clustering = kmeans(&features, cfg.m, cfg.seed, cfg.restarts).map_err(|err| err.in_stage("kmeans"))?;
            group_silhouette = silhouette(d.entries(), &clustering.labels);
            laps.lap("kmeans", false);

            let red = select_representatives(&full, &clustering);
            for (g, &c) in clustering.labels.iter().enumerate() {
                groups[g].cluster = Some(c);
            }
            for &r in &red.representative_of {
                groups[r].representative = true;
            }
            clustering_record = Some(ClusteringRecord {
                n_clusters: clustering.n_clusters,
                objective: clustering.objective,
                seed: clustering.seed,
                restarts: cfg.restarts,
                members: red.member_groups.clone(),
                representatives: red.representative_of.clone(),
            });
            drawn = red.representative_of.clone();
            reduced = red.matrix;
            laps.lap("representatives", false);

            if cfg.tsne.enabled {
                let p = full.n_groups();
                let perplexity = cfg.tsne.perplexity.min(max_perplexity(p));
                if p >= 3 && perplexity >= 1.0 {
                    let (kl, hit) = self
                        .cache
                        .get_or_compute(ensemble_id, 1.0, &full)
                        .map_err(|err| err.in_stage("tsne"))?;
                    let params = TsneParams {
                        perplexity,
                        iterations: cfg.tsne.iterations,
                        learning_rate: cfg.tsne.learning_rate,
                        seed: cfg.seed,
                    };
                    let (points, emb) = inspect_clusters(&kl, &clustering, &params).map_err(|err| err.in_stage("tsne"))?;
                    tsne_silhouette = silhouette(&euclidean_distances(&emb.coords), &clustering.labels);
                    tsne_record = Some(TsneRecord {
                        requested_perplexity: cfg.tsne.perplexity,
                        perplexity,
                        iterations: params.iterations,
                        learning_rate: params.learning_rate,
                        seed: params.seed,
                        points,
                        final_kl: emb.final_kl,
                        kl_after_exaggeration: emb.kl_after_exaggeration,
                    });
                    laps.lap("tsne", hit);
                } else {
                    log::warn!("skipping t-SNE: {p} groups admit no perplexity of at least 1");
                }
            }
        } else {
            drawn = (0..full.n_groups()).collect();
            reduced = full.clone();
        }

        let n = e.n_vertices();
        let order = match &cfg.order_from {
            Some(OrderSource::Permutation { permutation, source }) => {
                let o = VertexOrder::new(permutation.clone(), source.clone()).map_err(|err| err.in_stage("sorting"))?;
                if o.len() != n {
                    return Err(Error::Validation(format!(
                        "order covers {} vertices, ensemble has {n}",
                        o.len()
                    ))
                    .in_stage("sorting"));
                }
                o
            }
            Some(OrderSource::Partition { name }) => {
                let sub = e.select(name).map_err(|err| err.in_stage("sorting"))?;
                let k = cfg.knn_k.unwrap_or_else(|| default_knn(n));
                isomap_order(&sub.stack().matrix, k, format!("partition:{name}")).map_err(|err| err.in_stage("sorting"))?
            }
            Some(OrderSource::Analysis { .. }) => {
                return Err(Error::InvalidParameter(
                    "an order from a stored analysis must be resolved before running".into(),
                )
                .in_stage("sorting"))
            }
            None if cfg.sorting => {
                let k = cfg.knn_k.unwrap_or_else(|| default_knn(n));
                let source = format!("isomap:{}:{}", &ensemble_id[..ensemble_id.len().min(16)], cfg.config_hash());
                isomap_order(&reduced, k, source).map_err(|err| err.in_stage("sorting"))?
            }
            None => VertexOrder::identity(n, "identity"),
        };
        let ordered = apply_order(&order, &reduced).map_err(|err| err.in_stage("sorting"))?;
        let breaks = contiguity_breaks(&ordered, CONTIGUITY_THRESHOLD);
        laps.lap("sorting", false);

        let scale = match cfg.scale {
            ScaleMode::Unit => 1.0,
            ScaleMode::Partitions => e.n_partitions() as f64,
            ScaleMode::Auto if cfg.filtering => 1.0,
            ScaleMode::Auto => e.n_partitions() as f64,
        };
        let colors = assign_colors(reduced.n_groups(), cfg.seed).iter().map(|c| c.hex()).collect();
        let report = PipelineReport {
            schema_version: SCHEMA_VERSION,
            config: cfg.clone(),
            config_hash: cfg.config_hash(),
            ensemble_id: ensemble_id.to_owned(),
            n_vertices: n,
            n_partitions: e.n_partitions(),
            vertex_names: e.vertex_names().map(<[String]>::to_vec),
            groups,
            dropped_groups: stacked.dropped,
            clustering: clustering_record,
            vertex_order: order,
            tsne: tsne_record,
            reduced: ReducedRecord {
                groups: drawn,
                labels: reduced.labels().iter().map(ToString::to_string).collect(),
                colors,
                rows: reduced.entries().rows().into_iter().map(|r| r.to_vec()).collect(),
            },
            full_column_sums: full.column_sums(),
            scale,
            diagnostics: DiagnosticsRecord {
                contiguity_threshold: CONTIGUITY_THRESHOLD,
                total_contiguity_breaks: breaks.iter().sum(),
                contiguity_breaks: breaks,
                group_silhouette,
                tsne_silhouette,
            },
        };
        let (svg_1d, svg_2d) = render_report(&report).map_err(|err| err.in_stage("render"))?;
        laps.lap("render", false);
        Ok(PipelineOutput {
            report,
            svg_1d,
            svg_2d,
            timings: laps.finish(),
        })
    }
}

/// One-off run with a fresh cache.
pub fn run_pipeline(e: &PartitionEnsemble, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    Pipeline::new().run(e, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Partition;

    fn two_block() -> PartitionEnsemble {
        let labels: Vec<usize> = (0..12).map(|i| usize::from(i % 2 == 1)).collect();
        let a = Partition::hard("a", labels.clone(), None).unwrap();
        let b = Partition::hard("b", labels, None).unwrap();
        PartitionEnsemble::new(vec![a, b], None).unwrap()
    }

    #[test]
    fn config_defaults_from_minimal_json() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"m": 3}"#).unwrap();
        assert_eq!(cfg, PipelineConfig::new(3));
        assert!(serde_json::from_str::<PipelineConfig>("{}").is_err());
        assert_eq!(cfg.config_hash().len(), 16);
    }

    #[test]
    fn filtered_run_blocks_are_contiguous() {
        let mut cfg = PipelineConfig::new(2);
        cfg.tsne.perplexity = 1.0;
        let out = run_pipeline(&two_block(), &cfg).unwrap();
        assert_eq!(out.report.reduced.rows.len(), 2);
        assert_eq!(out.report.diagnostics.total_contiguity_breaks, 0);
        assert_eq!(out.report.scale, 1.0);
        assert!(out.report.tsne.is_some());
    }

    #[test]
    fn unfiltered_unsorted_keeps_everything() {
        let mut cfg = PipelineConfig::new(1);
        cfg.filtering = false;
        cfg.sorting = false;
        let out = run_pipeline(&two_block(), &cfg).unwrap();
        assert_eq!(out.report.reduced.rows.len(), 4);
        assert_eq!(out.report.vertex_order, VertexOrder::identity(12, "identity"));
        assert_eq!(out.report.scale, 2.0);
        assert!(out.report.clustering.is_none());
    }

    #[test]
    fn too_many_groups_names_the_stage() {
        let err = run_pipeline(&two_block(), &PipelineConfig::new(3)).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "kmeans", .. }));
        assert!(matches!(err.root(), Error::TooManyClusters { available: 2, .. }));
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let out = run_pipeline(&two_block(), &PipelineConfig::new(2)).unwrap();
        let json = out.report.to_json().replacen("\"schema_version\": 1", "\"schema_version\": 9", 1);
        assert!(matches!(
            PipelineReport::from_json(&json),
            Err(Error::SchemaMismatch { expected: 1, found: 9 })
        ));
        assert!(PipelineReport::from_json("{not json").is_err());
    }
}
