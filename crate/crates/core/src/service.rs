// SPDX-License-Identifier: Apache-2.0

//! HTTP analysis service under `/v1`.
//!
//! Ensembles are addressed by content hash. Analyses are cached per
//! `(ensemble id, config hash)`; concurrent identical requests share one
//! computation. Response bodies are deterministic. Cache status and stage
//! timings travel in the `x-palette-cache` and `x-palette-timings` headers.

use std::collections::HashMap;
use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::OnceCell;
use tower_http::cors::CorsLayer;

use crate::ensemble::PartitionEnsemble;
use crate::error::Error;
use crate::pipeline::{
    render_report, report_layouts, OrderSource, Pipeline, PipelineConfig, PipelineReport, Timings,
};
use crate::render::PaletteLayout;

pub const CACHE_HEADER: &str = "x-palette-cache";
pub const TIMINGS_HEADER: &str = "x-palette-timings";
pub const CONFIG_HASH_HEADER: &str = "x-palette-config-hash";
const BODY_LIMIT: usize = 256 * 1024 * 1024;

/// One finished analysis, kept as the bytes the client receives.
#[derive(Debug)]
pub struct Analysis {
    pub report: PipelineReport,
    pub body: String,
    pub svg_1d: String,
    pub svg_2d: String,
    pub timings: Option<Timings>,
}

type Slot = Arc<OnceCell<Arc<Analysis>>>;

#[derive(Debug, Default)]
pub struct AppState {
    pipeline: Pipeline,
    ensembles: RwLock<HashMap<String, Arc<PartitionEnsemble>>>,
    analyses: Mutex<HashMap<(String, String), Slot>>,
    data_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct AnalyzeBody<'a> {
    report: &'a PipelineReport,
    layout: &'a PaletteLayout,
}

#[derive(Debug, Deserialize)]
pub struct DiagramQuery {
    config_hash: String,
    #[serde(default = "default_kind")]
    kind: String,
}

#[derive(Debug, Deserialize)]
pub struct KindQuery {
    #[serde(default = "default_kind")]
    kind: String,
}

fn default_kind() -> String {
    "1d".into()
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn from_pipeline(e: &Error) -> Self {
        match e.root() {
            Error::TooManyClusters { requested, available } => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: json!({
                    "error": e.to_string(),
                    "requested": requested,
                    "max_groups": available,
                }),
            },
            Error::Numerical(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
            Error::Io(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, axum::Json(self.body)).into_response()
    }
}

fn svg_response(svg: &str) -> Response {
    ([(header::CONTENT_TYPE, "image/svg+xml")], svg.to_owned()).into_response()
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn pick_svg<'a>(kind: &str, svg_1d: &'a str, svg_2d: &'a str) -> Result<&'a str, ApiError> {
    match kind {
        "1d" => Ok(svg_1d),
        "2d" => Ok(svg_2d),
        other => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("unknown diagram kind '{other}'; expected 1d or 2d"),
        )),
    }
}

impl AppState {
    pub fn new(data_dir: Option<PathBuf>) -> crate::Result<Self> {
        let state = AppState {
            data_dir,
            ..AppState::default()
        };
        if let Some(dir) = &state.data_dir {
            let ens_dir = dir.join("ensembles");
            fs::create_dir_all(&ens_dir)?;
            fs::create_dir_all(dir.join("reports"))?;
            let mut entries: Vec<PathBuf> = fs::read_dir(&ens_dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            let mut map = state.ensembles.write().expect("ensemble lock");
            for path in entries {
                match fs::read_to_string(&path).map_err(Error::from).and_then(|s| PartitionEnsemble::from_json_str(&s)) {
                    Ok(e) => {
                        map.insert(e.content_hash(), Arc::new(e));
                    }
                    Err(err) => log::warn!("skipping stored ensemble {}: {err}", path.display()),
                }
            }
            drop(map);
        }
        Ok(state)
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    /// Drop cached analyses and divergence matrices. Stored ensembles stay.
    pub fn clear_caches(&self) {
        self.analyses.lock().expect("analysis lock").clear();
        self.pipeline.cache().clear();
    }

    fn ensemble(&self, id: &str) -> Option<Arc<PartitionEnsemble>> {
        self.ensembles.read().expect("ensemble lock").get(id).cloned()
    }

    fn insert_ensemble(&self, e: PartitionEnsemble) -> crate::Result<String> {
        let id = e.content_hash();
        let fresh = {
            let mut map = self.ensembles.write().expect("ensemble lock");
            if map.contains_key(&id) {
                false
            } else {
                map.insert(id.clone(), Arc::new(e.clone()));
                true
            }
        };
        if fresh {
            if let Some(dir) = &self.data_dir {
                fs::write(dir.join("ensembles").join(format!("{id}.json")), e.to_json_string())?;
            }
        }
        Ok(id)
    }

    fn slot(&self, id: &str, hash: &str) -> Slot {
        let mut map = self.analyses.lock().expect("analysis lock");
        Arc::clone(map.entry((id.to_owned(), hash.to_owned())).or_default())
    }

    fn finished(&self, id: &str, hash: &str) -> Option<Arc<Analysis>> {
        let map = self.analyses.lock().expect("analysis lock");
        map.get(&(id.to_owned(), hash.to_owned())).and_then(|s| s.get().cloned())
    }

    fn report_path(&self, id: &str, hash: &str) -> Option<PathBuf> {
        self.data_dir
            .as_ref()
            .map(|d| d.join("reports").join(id).join(format!("{hash}.json")))
    }

    /// Finished analysis from memory, or from disk when persistence is on.
    fn lookup(&self, id: &str, hash: &str) -> Option<Arc<Analysis>> {
        if let Some(a) = self.finished(id, hash) {
            return Some(a);
        }
        let path = self.report_path(id, hash)?;
        let report = PipelineReport::from_json(&fs::read_to_string(path).ok()?).ok()?;
        let analysis = Arc::new(analysis_from_report(report, None).ok()?);
        let slot = self.slot(id, hash);
        let _ = slot.set(Arc::clone(&analysis));
        Some(analysis)
    }

    fn persist(&self, a: &Analysis) {
        if let Some(path) = self.report_path(&a.report.ensemble_id, &a.report.config_hash) {
            let res = path
                .parent()
                .map_or(Ok(()), fs::create_dir_all)
                .and_then(|_| fs::write(&path, a.report.to_json()));
            if let Err(err) = res {
                log::warn!("could not persist report {}: {err}", path.display());
            }
        }
    }
}

fn analysis_from_report(report: PipelineReport, timings: Option<Timings>) -> crate::Result<Analysis> {
    let (svg_1d, svg_2d) = render_report(&report)?;
    let (layout, _) = report_layouts(&report)?;
    let body = serde_json::to_string(&AnalyzeBody {
        report: &report,
        layout: &layout,
    })?;
    Ok(Analysis {
        report,
        body,
        svg_1d,
        svg_2d,
        timings,
    })
}

async fn create_ensemble(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let text = match std::str::from_utf8(&body) {
        Ok(t) => t,
        Err(_) => return ApiError::new(StatusCode::BAD_REQUEST, "body is not UTF-8").into_response(),
    };
    let e = match PartitionEnsemble::from_json_str(text) {
        Ok(e) => e,
        Err(err) => return ApiError::new(StatusCode::BAD_REQUEST, err.to_string()).into_response(),
    };
    let summary = json!({
        "n_vertices": e.n_vertices(),
        "n_partitions": e.n_partitions(),
        "n_groups": e.total_groups(),
    });
    match state.insert_ensemble(e) {
        Ok(id) => {
            let mut body = summary;
            body["id"] = json!(id);
            (StatusCode::CREATED, axum::Json(body)).into_response()
        }
        Err(err) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, err.to_string()).into_response(),
    }
}

async fn get_ensemble(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match state.ensemble(&id) {
        Some(e) => json_response(StatusCode::OK, e.to_json_string()),
        None => ApiError::new(StatusCode::NOT_FOUND, format!("unknown ensemble '{id}'")).into_response(),
    }
}

async fn analyze(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Response {
    let Some(ensemble) = state.ensemble(&id) else {
        return ApiError::new(StatusCode::NOT_FOUND, format!("unknown ensemble '{id}'")).into_response();
    };
    let mut cfg: PipelineConfig = match serde_json::from_slice(&body) {
        Ok(c) => c,
        Err(err) => {
            return ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("invalid config: {err}")).into_response()
        }
    };
    if let Err(err) = cfg.validate() {
        return ApiError::from_pipeline(&err).into_response();
    }
    if let Some(OrderSource::Analysis { ensemble_id, config_hash }) = &cfg.order_from {
        let Some(pinned) = state.lookup(ensemble_id, config_hash) else {
            return ApiError::new(
                StatusCode::NOT_FOUND,
                format!("no analysis '{config_hash}' for ensemble '{ensemble_id}'"),
            )
            .into_response();
        };
        cfg.order_from = Some(OrderSource::from_order(&pinned.report.vertex_order));
    }
    let hash = cfg.config_hash();
    let slot = state.slot(&id, &hash);
    let mut computed = false;
    let result = slot
        .get_or_try_init(|| {
            computed = true;
            let state = Arc::clone(&state);
            let id = id.clone();
            async move {
                let joined = tokio::task::spawn_blocking(move || {
                    let out = state.pipeline().run_with_id(&ensemble, &id, &cfg)?;
                    let analysis = analysis_from_report(out.report, Some(out.timings))?;
                    state.persist(&analysis);
                    Ok::<_, Error>(Arc::new(analysis))
                })
                .await;
                match joined {
                    Ok(r) => r.map_err(|e| ApiError::from_pipeline(&e)),
                    Err(join) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, join.to_string())),
                }
            }
        })
        .await;
    let analysis = match result {
        Ok(a) => Arc::clone(a),
        Err(err) => return err.into_response(),
    };
    let mut resp = json_response(StatusCode::OK, analysis.body.clone());
    let headers = resp.headers_mut();
    headers.insert(CACHE_HEADER, HeaderValue::from_static(if computed { "miss" } else { "hit" }));
    if let Ok(v) = HeaderValue::from_str(&hash) {
        headers.insert(CONFIG_HASH_HEADER, v);
    }
    if let Some(t) = &analysis.timings {
        if let Ok(v) = HeaderValue::from_str(&serde_json::to_string(t).expect("timings serialize")) {
            headers.insert(TIMINGS_HEADER, v);
        }
    }
    resp
}

async fn get_analysis(State(state): State<Arc<AppState>>, Path((id, hash)): Path<(String, String)>) -> Response {
    match state.lookup(&id, &hash) {
        Some(a) => json_response(StatusCode::OK, a.report.to_json()),
        None => ApiError::new(StatusCode::NOT_FOUND, format!("no analysis '{hash}' for ensemble '{id}'")).into_response(),
    }
}

async fn diagram(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<DiagramQuery>,
) -> Response {
    if state.ensemble(&id).is_none() {
        return ApiError::new(StatusCode::NOT_FOUND, format!("unknown ensemble '{id}'")).into_response();
    }
    let Some(a) = state.lookup(&id, &q.config_hash) else {
        return ApiError::new(StatusCode::NOT_FOUND, format!("no analysis with config hash '{}'", q.config_hash))
            .into_response();
    };
    match pick_svg(&q.kind, &a.svg_1d, &a.svg_2d) {
        Ok(svg) => svg_response(svg),
        Err(e) => e.into_response(),
    }
}

async fn render(Query(q): Query<KindQuery>, body: Bytes) -> Response {
    let report = match std::str::from_utf8(&body)
        .map_err(|_| Error::Parse("body is not UTF-8".into()))
        .and_then(PipelineReport::from_json)
    {
        Ok(r) => r,
        Err(err) => return ApiError::new(StatusCode::BAD_REQUEST, err.to_string()).into_response(),
    };
    match render_report(&report) {
        Ok((one, two)) => match pick_svg(&q.kind, &one, &two) {
            Ok(svg) => svg_response(svg),
            Err(e) => e.into_response(),
        },
        Err(err) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, err.to_string()).into_response(),
    }
}

async fn health() -> &'static str {
    "ok"
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/ensembles", post(create_ensemble))
        .route("/v1/ensembles/{id}", get(get_ensemble))
        .route("/v1/ensembles/{id}/analyze", post(analyze))
        .route("/v1/ensembles/{id}/analyses/{hash}", get(get_analysis))
        .route("/v1/ensembles/{id}/diagram", get(diagram))
        .route("/v1/render", post(render))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Bind and serve until the process is stopped.
pub async fn serve(addr: SocketAddr, data_dir: Option<PathBuf>) -> crate::Result<()> {
    let state = Arc::new(AppState::new(data_dir)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
