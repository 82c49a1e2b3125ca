//! JSON API for the path explorer. The path, cross-validation and AIC are
//! computed once at startup; requests only read them.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Body;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mcfuse_core::selection::CrossValidation;
use mcfuse_core::{AicCurve, CvReport, FitConfig, PathResult};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;

use crate::error::{AppError, Result};
use crate::export::{self, json_bytes, ModelExport, SelectionSummary, SCHEMA_VERSION};
use crate::pipeline::Prepared;

pub struct AppState {
    pub prep: Prepared,
    pub config: FitConfig,
    pub path: PathResult,
    pub cv: CrossValidation,
    pub aic: AicCurve,
    pub out: PathBuf,
    /// Serializes writes of selected models; holds the last suffix used.
    save: Mutex<u64>,
}

impl AppState {
    pub fn new(prep: Prepared, cfg: &FitConfig, k: usize, seed: u64, out: PathBuf) -> Result<Arc<AppState>> {
        let path = prep.path(cfg)?;
        let cv = prep.cross_validate(&path, cfg, k, seed)?;
        let aic = prep.aic(&path);
        Ok(Arc::new(AppState { prep, config: *cfg, path, cv, aic, out, save: Mutex::new(0) }))
    }

    pub fn model(&self, index: usize) -> ModelExport {
        export::model_export(&self.prep, &self.path, index)
    }

    /// Grid index nearest to `lambda`, or an error message when it is not a
    /// number in `[0, λ_max]`.
    fn locate(&self, lambda: Option<f64>) -> std::result::Result<usize, ApiError> {
        let lambda_max = self.path.lambda_max;
        match lambda {
            Some(l) if l.is_finite() && (0.0..=lambda_max).contains(&l) => Ok(self.path.nearest(l)),
            Some(l) => Err(ApiError::bad_request(format!("lambda {l} is outside [0, {lambda_max}]"), lambda_max)),
            None => Err(ApiError::bad_request("lambda is required".into(), lambda_max)),
        }
    }
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    message: String,
    lambda_max: Option<f64>,
}

impl ApiError {
    fn bad_request(message: String, lambda_max: f64) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, message, lambda_max: Some(lambda_max) }
    }
}

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, message: e.to_string(), lambda_max: None }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "schema": SCHEMA_VERSION, "error": self.message });
        if let Some(hi) = self.lambda_max {
            body["lambda_min"] = json!(0.0);
            body["lambda_max"] = json!(hi);
        }
        (self.status, Json(body)).into_response()
    }
}

fn json_response<T: Serialize>(value: &T) -> std::result::Result<Response, ApiError> {
    let bytes = json_bytes(value)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], Body::from(bytes)).into_response())
}

#[derive(Serialize)]
struct ClassMeta<'a> {
    id: &'a str,
    n: usize,
    available: Vec<&'a str>,
}

#[derive(Serialize)]
struct Meta<'a> {
    schema: &'a str,
    predictors: &'a [String],
    classes: Vec<ClassMeta<'a>>,
    n: usize,
    lambda_max: f64,
    grid_size: usize,
    config: &'a FitConfig,
    k: usize,
    seed: u64,
}

async fn meta(State(s): State<Arc<AppState>>) -> std::result::Result<Response, ApiError> {
    let ds = &s.prep.dataset;
    let classes = ds
        .classes
        .iter()
        .map(|c| ClassMeta {
            id: &c.id,
            n: c.n(),
            available: c.available.iter().map(|&j| ds.predictors[j].as_str()).collect(),
        })
        .collect();
    json_response(&Meta {
        schema: SCHEMA_VERSION,
        predictors: &ds.predictors,
        classes,
        n: ds.n_total(),
        lambda_max: s.path.lambda_max,
        grid_size: s.path.grid.len(),
        config: &s.config,
        k: s.cv.report.k,
        seed: s.cv.report.seed,
    })
}

#[derive(Serialize)]
struct PathBody<'a> {
    schema: &'a str,
    lambda_max: f64,
    grid: &'a [f64],
    points: Vec<ModelExport>,
}

async fn path(State(s): State<Arc<AppState>>) -> std::result::Result<Response, ApiError> {
    json_response(&PathBody {
        schema: SCHEMA_VERSION,
        lambda_max: s.path.lambda_max,
        grid: &s.path.grid,
        points: (0..s.path.points.len()).map(|i| s.model(i)).collect(),
    })
}

#[derive(Serialize)]
struct CvBody<'a> {
    schema: &'a str,
    cv: &'a CvReport,
    aic: &'a AicCurve,
    selection: SelectionSummary,
}

async fn cv(State(s): State<Arc<AppState>>) -> std::result::Result<Response, ApiError> {
    json_response(&CvBody {
        schema: SCHEMA_VERSION,
        cv: &s.cv.report,
        aic: &s.aic,
        selection: export::selection_summary(&s.prep, &s.path, &s.cv, &s.aic),
    })
}

fn parse_lambda(q: &HashMap<String, String>) -> Option<f64> {
    q.get("lambda").map(|v| v.trim().parse::<f64>().unwrap_or(f64::NAN))
}

async fn model(
    State(s): State<Arc<AppState>>,
    Query(q): Query<HashMap<String, String>>,
) -> std::result::Result<Response, ApiError> {
    let index = s.locate(parse_lambda(&q))?;
    json_response(&s.model(index))
}

#[derive(Debug, Deserialize)]
struct SelectRequest {
    lambda: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectResponse {
    pub schema: String,
    pub file: PathBuf,
    pub grid_index: usize,
    pub lambda: f64,
}

async fn select(
    State(s): State<Arc<AppState>>,
    body: std::result::Result<Json<SelectRequest>, axum::extract::rejection::JsonRejection>,
) -> std::result::Result<Response, ApiError> {
    let lambda = match body {
        Ok(Json(req)) => req.lambda,
        Err(e) => return Err(ApiError::bad_request(e.body_text(), s.path.lambda_max)),
    };
    let index = s.locate(lambda)?;
    let model = s.model(index);
    let bytes = json_bytes(&model)?;

    let mut last = s.save.lock().await;
    let millis = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or_default();
    let mut suffix = millis.max(*last + 1);
    let file = loop {
        let candidate = s.out.join(format!("selected_model_{suffix}.json"));
        if !candidate.exists() {
            break candidate;
        }
        suffix += 1;
    };
    std::fs::write(&file, bytes).map_err(|e| AppError::io(&file, e))?;
    *last = suffix;
    drop(last);
    log::info!("saved model at lambda = {:e} to {}", model.lambda, file.display());
    json_response(&SelectResponse { schema: SCHEMA_VERSION.into(), file, grid_index: index, lambda: model.lambda })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/path", get(path))
        .route("/api/cv", get(cv))
        .route("/api/model", get(model))
        .route("/api/select", post(select))
        .with_state(state)
}

/// Serves on 127.0.0.1:`port` until the process is stopped.
pub async fn serve(state: Arc<AppState>, port: u16) -> Result<()> {
    let addr = std::net::SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| AppError::Data(format!("cannot bind {addr}: {e}")))?;
    log::info!("listening on http://{addr}");
    axum::serve(listener, router(state)).await.map_err(|e| AppError::Data(format!("server: {e}")))
}
