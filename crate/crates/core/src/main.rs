// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use palette_core::ensemble::{load_ensemble, save_ensemble, EnsembleFormat};
use palette_core::pipeline::{load_report, render_report, OrderSource, Pipeline, PipelineConfig, ScaleMode};
use palette_core::render::BaselineMode;
use palette_core::synth::{generate_synthetic_ensemble, SynthMode, SynthParams};
use palette_core::{service, Error, Result};

#[derive(Parser)]
#[command(name = "palette", version, about = "Palette diagrams for ensembles of network partitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze an ensemble and write report.json plus both SVG diagrams.
    Run(RunArgs),
    /// Generate a synthetic ensemble with planted groups.
    Synth(SynthArgs),
    /// Redraw the diagrams of an existing report.
    Render(RenderArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Ensemble JSON file or directory of CSV files.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Target number of groups M.
    #[arg(long)]
    groups: usize,
    /// Neighbors in the Isomap graph; defaults to max(10, ceil(ln N)).
    #[arg(long)]
    knn: Option<usize>,
    #[arg(long, default_value = "symmetric")]
    baseline: BaselineMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    no_filter: bool,
    #[arg(long)]
    no_sort: bool,
    /// Reuse the vertex order stored in another report.
    #[arg(long, conflicts_with = "order_partition")]
    order_from: Option<PathBuf>,
    /// Order vertices by the Isomap order of one named partition.
    #[arg(long)]
    order_partition: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    tsne_perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    tsne_iterations: usize,
    #[arg(long)]
    no_tsne: bool,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Band height divisor: auto, unit or partitions.
    #[arg(long, default_value = "auto", value_parser = parse_scale)]
    scale: ScaleMode,
    /// Draw filtered-out mass as a grey band.
    #[arg(long)]
    residual: bool,
    /// Read the full configuration from a JSON file instead of flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    l: usize,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    #[arg(long, default_value = "soft")]
    mode: SynthMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (.json) or directory (CSV files).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Persist ensembles and reports under this directory.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

fn parse_scale(s: &str) -> std::result::Result<ScaleMode, String> {
    match s {
        "auto" => Ok(ScaleMode::Auto),
        "unit" => Ok(ScaleMode::Unit),
        "partitions" => Ok(ScaleMode::Partitions),
        other => Err(format!("unknown scale '{other}'; expected auto, unit or partitions")),
    }
}

fn config_from_args(a: &RunArgs) -> Result<PipelineConfig> {
    if let Some(path) = &a.config {
        return Ok(serde_json::from_str(&fs::read_to_string(path)?)?);
    }
    let mut cfg = PipelineConfig::new(a.groups);
    cfg.alpha = a.alpha;
    cfg.knn_k = a.knn;
    cfg.baseline = a.baseline;
    cfg.seed = a.seed;
    cfg.restarts = a.restarts;
    cfg.filtering = !a.no_filter;
    cfg.sorting = !a.no_sort;
    cfg.scale = a.scale;
    cfg.residual_band = a.residual;
    cfg.tsne.enabled = !a.no_tsne;
    cfg.tsne.perplexity = a.tsne_perplexity;
    cfg.tsne.iterations = a.tsne_iterations;
    if let Some(path) = &a.order_from {
        let other = load_report(path)?;
        cfg.order_from = Some(OrderSource::from_order(&other.vertex_order));
    } else if let Some(name) = &a.order_partition {
        cfg.order_from = Some(OrderSource::Partition { name: name.clone() });
    }
    Ok(cfg)
}

fn write_outputs(out: &Path, report_json: &str, svg_1d: &str, svg_2d: &str) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("report.json"), report_json)?;
    fs::write(out.join("palette_1d.svg"), svg_1d)?;
    fs::write(out.join("palette_2d.svg"), svg_2d)?;
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let cfg = config_from_args(&a)?;
    let e = load_ensemble(&a.input, EnsembleFormat::detect(&a.input))?;
    let out = Pipeline::new().run(&e, &cfg)?;
    write_outputs(&a.out, &out.report.to_json(), &out.svg_1d, &out.svg_2d)?;
    fs::write(a.out.join("timings.json"), serde_json::to_string_pretty(&out.timings)?)?;
    let r = &out.report;
    println!(
        "groups {} -> {}, contiguity breaks {}, config {}",
        r.groups.len(),
        r.reduced.rows.len(),
        r.diagnostics.total_contiguity_breaks,
        r.config_hash
    );
    if let Some(s) = r.diagnostics.group_silhouette {
        println!("group silhouette {s:.4}");
    }
    if let Some(t) = &r.tsne {
        println!("t-SNE perplexity {:.4}, final KL {:.6}", t.perplexity, t.final_kl);
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let s = generate_synthetic_ensemble(&SynthParams {
        n: a.n,
        k: a.k,
        l: a.l,
        eta: a.eta,
        mode: a.mode,
        seed: a.seed,
    })?;
    save_ensemble(&s.ensemble, &a.out, EnsembleFormat::detect(&a.out))?;
    let planted = a.out.with_extension("planted.json");
    if EnsembleFormat::detect(&a.out) == EnsembleFormat::Json {
        fs::write(&planted, serde_json::to_string(&s.planted)?)?;
    }
    Ok(())
}

fn render(a: RenderArgs) -> Result<()> {
    let report = load_report(&a.report)?;
    let (one, two) = render_report(&report)?;
    write_outputs(&a.out, &report.to_json(), &one, &two)
}

fn serve(a: ServeArgs) -> Result<()> {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| Error::InvalidParameter(format!("bad listen address: {e}")))?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(service::serve(addr, a.data_dir))
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PALETTE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("PALETTE_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::InvalidParameter("PALETTE_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors are input errors: exit 1, keeping 2 for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = init_threads().and_then(|()| match cli.command {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Render(a) => render(a),
        Command::Serve(a) => serve(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
