// SPDX-License-Identifier: Apache-2.0

mod common;

use palette_core::ensemble::{Partition, PartitionEnsemble};
use palette_core::pipeline::{
    load_report, render_report, report_layouts, run_pipeline, save_report, OrderSource, Pipeline, PipelineConfig,
    PipelineReport, ScaleMode,
};
use palette_core::synth::{generate_synthetic_ensemble, SynthMode, SynthParams, SyntheticEnsemble};
use palette_core::Error;

fn soft(n: usize, k: usize, l: usize, seed: u64) -> SyntheticEnsemble {
    generate_synthetic_ensemble(&SynthParams { n, k, l, eta: 0.05, mode: SynthMode::Soft, seed }).unwrap()
}

fn quick(m: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(m);
    cfg.tsne.iterations = 300;
    cfg
}

fn band_paths(svg: &str) -> usize {
    roxmltree::Document::parse(svg)
        .unwrap()
        .descendants()
        .filter(|n| n.attribute("class") == Some("band"))
        .count()
}

#[test]
fn filter_and_sort_combinations() {
    let s = soft(30, 3, 4, 1);
    let total = s.ensemble.total_groups();
    for (filtering, sorting) in [(true, true), (true, false), (false, true), (false, false)] {
        let mut cfg = quick(3);
        cfg.filtering = filtering;
        cfg.sorting = sorting;
        let out = run_pipeline(&s.ensemble, &cfg).unwrap();
        let r = &out.report;
        let rows = if filtering { 3 } else { total };
        assert_eq!(r.reduced.rows.len(), rows, "filtering={filtering} sorting={sorting}");
        assert_eq!(band_paths(&out.svg_1d), rows);
        assert_eq!(r.clustering.is_some(), filtering);
        assert_eq!(r.tsne.is_some(), filtering);
        assert_eq!(r.scale, if filtering { 1.0 } else { 4.0 });
        if sorting {
            assert!(r.vertex_order.source().starts_with("isomap:"));
        } else {
            assert_eq!(r.vertex_order.permutation(), (0..30).collect::<Vec<_>>().as_slice());
        }
        if filtering && sorting {
            assert_eq!(r.diagnostics.total_contiguity_breaks, 0);
        }
    }
}

#[test]
fn explicit_scale_modes() {
    let s = soft(20, 2, 3, 2);
    for (mode, want) in [(ScaleMode::Unit, 1.0), (ScaleMode::Partitions, 3.0)] {
        let mut cfg = quick(2);
        cfg.scale = mode;
        assert_eq!(run_pipeline(&s.ensemble, &cfg).unwrap().report.scale, want);
    }
}

#[test]
fn order_can_be_reused_across_ensembles() {
    let a = soft(24, 3, 3, 5);
    let b = soft(24, 3, 3, 6);
    let first = run_pipeline(&a.ensemble, &quick(3)).unwrap();
    let mut cfg = quick(3);
    cfg.order_from = Some(OrderSource::from_order(&first.report.vertex_order));
    let second = run_pipeline(&b.ensemble, &cfg).unwrap();
    assert_eq!(second.report.vertex_order.permutation(), first.report.vertex_order.permutation());
    assert_eq!(second.report.vertex_order.source(), first.report.vertex_order.source());

    let wrong = soft(25, 3, 3, 6);
    let err = run_pipeline(&wrong.ensemble, &cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "sorting", .. }), "{err}");
}

#[test]
fn order_from_a_named_partition() {
    let s = soft(24, 3, 3, 8);
    let name = s.ensemble.partitions()[1].name().to_owned();
    let mut cfg = quick(3);
    cfg.order_from = Some(OrderSource::Partition { name: name.clone() });
    let out = run_pipeline(&s.ensemble, &cfg).unwrap();
    assert_eq!(out.report.vertex_order.source(), format!("partition:{name}"));

    cfg.order_from = Some(OrderSource::Partition { name: "missing".into() });
    assert!(run_pipeline(&s.ensemble, &cfg).is_err());

    cfg.order_from = Some(OrderSource::Analysis { ensemble_id: "x".into(), config_hash: "y".into() });
    assert!(matches!(run_pipeline(&s.ensemble, &cfg), Err(Error::Stage { stage: "sorting", .. })));
}

#[test]
fn reports_round_trip_through_disk() {
    let s = soft(30, 3, 4, 9);
    let mut cfg = quick(3);
    cfg.residual_band = true;
    let out = run_pipeline(&s.ensemble, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    save_report(&path, &out.report).unwrap();
    let back = load_report(&path).unwrap();
    assert_eq!(back, out.report);
    let (one, two) = render_report(&back).unwrap();
    assert_eq!(one, out.svg_1d);
    assert_eq!(two, out.svg_2d);
    assert!(one.contains("class=\"residual\""));

    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(matches!(load_report(&path), Err(Error::Parse(_))));
    std::fs::write(&path, text.replacen("\"schema_version\": 1", "\"schema_version\": 99", 1)).unwrap();
    assert!(matches!(load_report(&path), Err(Error::SchemaMismatch { found: 99, .. })));
}

#[test]
fn layout_conserves_full_column_mass_with_residual() {
    let s = soft(30, 3, 4, 10);
    let mut cfg = quick(3);
    cfg.residual_band = true;
    cfg.scale = ScaleMode::Partitions;
    let out = run_pipeline(&s.ensemble, &cfg).unwrap();
    let (layout, _) = report_layouts(&out.report).unwrap();
    let residual = layout.residual.as_ref().unwrap();
    for pos in 0..layout.n_positions() {
        let v = out.report.vertex_order.permutation()[pos];
        let drawn = layout.total_height(pos) + residual.height(pos);
        assert!((drawn * out.report.scale - out.report.full_column_sums[v]).abs() < 1e-9);
    }
}

#[test]
fn report_is_deterministic_and_timings_separate() {
    let s = soft(30, 3, 4, 11);
    let a = run_pipeline(&s.ensemble, &quick(3)).unwrap();
    let b = run_pipeline(&s.ensemble, &quick(3)).unwrap();
    assert_eq!(a.report.to_json(), b.report.to_json());
    assert_eq!(a.svg_1d, b.svg_1d);
    assert!(!a.report.to_json().contains("seconds"));

    let t = &a.timings;
    assert!(t.stages.iter().all(|s| s.seconds >= 0.0));
    let sum: f64 = t.stages.iter().map(|s| s.seconds).sum();
    assert!((sum - t.total_seconds).abs() <= 0.1 * t.total_seconds.max(1e-6));
    for stage in ["stack", "divergence", "kmeans", "representatives", "tsne", "sorting", "render"] {
        assert!(t.stage(stage).is_some(), "missing stage {stage}");
    }
}

#[test]
fn divergences_are_reused_when_only_m_changes() {
    let s = soft(30, 3, 4, 12);
    let pipeline = Pipeline::new();
    let first = pipeline.run(&s.ensemble, &quick(3)).unwrap();
    assert!(!first.timings.stage("divergence").unwrap().cached);
    let second = pipeline.run(&s.ensemble, &quick(2)).unwrap();
    assert!(second.timings.stage("divergence").unwrap().cached);
    assert!(second.timings.stage("tsne").unwrap().cached);
    assert_eq!(pipeline.cache().len(), 2);

    let mut alpha = quick(3);
    alpha.alpha = 0.7;
    let third = pipeline.run(&s.ensemble, &alpha).unwrap();
    assert!(!third.timings.stage("divergence").unwrap().cached);

    pipeline.cache().clear();
    let again = pipeline.run(&s.ensemble, &quick(3)).unwrap();
    assert_eq!(again.report, first.report);
}

#[test]
fn too_many_clusters_reports_the_limit() {
    let labels = vec![0, 0, 1, 1, 2, 2];
    let parts = (0..3).map(|c| Partition::hard(format!("c{c}"), labels.clone(), None).unwrap()).collect();
    let e = PartitionEnsemble::new(parts, None).unwrap();
    match run_pipeline(&e, &quick(4)) {
        Err(Error::Stage { stage: "kmeans", source }) => {
            assert!(matches!(*source, Error::TooManyClusters { requested: 4, available: 3 }));
        }
        other => panic!("expected a kmeans failure, got {other:?}"),
    }
}

#[test]
fn small_ensembles_skip_tsne() {
    let labels = vec![0, 1, 0, 1];
    let e = PartitionEnsemble::new(vec![Partition::hard("only", labels, None).unwrap()], None).unwrap();
    let out = run_pipeline(&e, &quick(2)).unwrap();
    assert!(out.report.tsne.is_none());
    assert_eq!(out.report.reduced.rows.len(), 2);
}

#[test]
fn tsne_perplexity_is_clamped_for_few_groups() {
    let s = soft(20, 2, 4, 13);
    let out = run_pipeline(&s.ensemble, &quick(2)).unwrap();
    let t = out.report.tsne.unwrap();
    assert_eq!(t.requested_perplexity, 10.0);
    assert!((t.perplexity - 7.0 / 3.0).abs() < 1e-12);
    assert_eq!(t.points.len(), 8);
}

#[test]
fn invalid_configs_are_rejected() {
    let s = soft(20, 2, 2, 14);
    for edit in [
        |c: &mut PipelineConfig| c.m = 0,
        |c: &mut PipelineConfig| c.alpha = f64::NAN,
        |c: &mut PipelineConfig| c.restarts = 0,
        |c: &mut PipelineConfig| c.tsne.learning_rate = -1.0,
    ] {
        let mut cfg = quick(2);
        edit(&mut cfg);
        assert!(run_pipeline(&s.ensemble, &cfg).is_err());
    }
}

#[test]
fn config_hash_tracks_content() {
    let a = quick(3);
    let mut b = quick(3);
    assert_eq!(a.config_hash(), b.config_hash());
    b.seed = 1;
    assert_ne!(a.config_hash(), b.config_hash());
    let json = serde_json::to_string(&a).unwrap();
    let back: PipelineConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(back.config_hash(), a.config_hash());
}

#[test]
fn report_schema_rejects_missing_version() {
    assert!(matches!(PipelineReport::from_json("{}"), Err(Error::Parse(_)) | Err(Error::SchemaMismatch { .. })));
}
