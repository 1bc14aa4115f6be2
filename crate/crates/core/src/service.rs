//! Stateless JSON API over the simulator.
//!
//! | method | path             | body / query                                   |
//! |--------|------------------|------------------------------------------------|
//! | POST   | `/api/simulate`  | scenario fields, optional `downsample`         |
//! | POST   | `/api/sweep`     | scenario fields plus `axes`                    |
//! | GET    | `/api/critical`  | `kappa`, `lambda`, optional `maturity`, `dt`   |
//! | POST   | `/api/lyapunov`  | scenario fields, optional `epsilon`            |
//! | GET    | `/healthz`       |                                                |
//!
//! Everything else is served from the UI directory when one is configured.
//! Errors are `{"error": {"code", "message", "field"}}`.
//!
//! Model work runs on the blocking pool, at most one job per core at a time,
//! so the I/O workers stay responsive however many requests pile up.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tokio::sync::Semaphore;
use tower_http::services::ServeDir;

use crate::dynamics::{critical_capital, CriticalCapital};
use crate::error::Error;
use crate::lyapunov::{lyapunov_estimate, DEFAULT_EPSILON};
use crate::model::{ImpactModel, ModelParams};
use crate::regime::{classify, RegimeReport, Thresholds};
use crate::scenario::{parse_scenario_value, Scenario};
use crate::sweep::{cell_count, sweep, Axis, Execution, SweepCell, SweepParam};
use crate::trajectory::{simulate, Termination, Trajectory};

pub const DEFAULT_DOWNSAMPLE: usize = 2000;
pub const MAX_SWEEP_CELLS: usize = 40_000;
pub const DEFAULT_CRITICAL_DT: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Directory holding the built explorer UI.
    pub ui_dir: Option<PathBuf>,
    /// Model computations allowed to run at once; the rest queue.
    pub compute_slots: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            ui_dir: None,
            compute_slots: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Clone)]
struct AppState {
    compute: Arc<Semaphore>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>, field: Option<&str>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            field: field.map(str::to_string),
        }
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = match err {
            Error::DegenerateDenominator { .. } | Error::NoRootFound { .. } | Error::MaturityCollapse { .. } => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, err.code(), err.to_string(), err.field())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "error": { "code": self.code, "message": self.message, "field": self.field }
        });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// A response body already encoded off the I/O workers.
pub struct JsonBody(Vec<u8>);

impl JsonBody {
    fn encode<T: Serialize>(value: &T) -> Self {
        JsonBody(serde_json::to_vec(value).expect("response types serialize"))
    }
}

impl IntoResponse for JsonBody {
    fn into_response(self) -> Response {
        ([(header::CONTENT_TYPE, "application/json")], self.0).into_response()
    }
}

/// Splits a request object into scenario fields and the named extras.
fn split_body(body: &[u8], extras: &[&str]) -> Result<(Value, Map<String, Value>), ApiError> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::from(Error::Schema { path: ".".into(), message: e.to_string() }))?;
    let Value::Object(mut map) = value else {
        return Err(Error::Schema {
            path: ".".into(),
            message: "expected a JSON object".into(),
        }
        .into());
    };
    let mut taken = Map::new();
    for key in extras {
        if let Some(v) = map.remove(*key) {
            taken.insert((*key).to_string(), v);
        }
    }
    Ok((Value::Object(map), taken))
}

fn extra<T: for<'de> Deserialize<'de>>(extras: &Map<String, Value>, key: &str) -> Result<Option<T>, ApiError> {
    match extras.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::Schema { path: key.into(), message: e.to_string() }.into()),
    }
}

async fn blocking<T: Send + 'static>(app: &AppState, f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    let internal = |e: String| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e, None);
    let _permit = app.compute.acquire().await.map_err(|e| internal(e.to_string()))?;
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| internal(e.to_string()))
}

#[derive(Debug, Serialize)]
pub struct Series {
    pub step: Vec<usize>,
    pub t: Vec<f64>,
    pub capital: Vec<f64>,
    pub avg_maturity: Vec<f64>,
    pub implied: Vec<f64>,
    pub vega: Vec<f64>,
    /// Breakdown of the step leaving each state; `null` on the final state.
    pub aged_vega: Vec<Option<f64>>,
    pub trade: Vec<Option<f64>>,
    pub realized_pnl: Vec<Option<f64>>,
    pub implied_pnl: Vec<Option<f64>>,
    pub total_pnl: Vec<Option<f64>>,
    pub denom_margin: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct SimulateResponse {
    pub scenario: Scenario,
    pub termination: Termination,
    pub steps: usize,
    pub report: RegimeReport,
    pub negative_implied_step: Option<usize>,
    pub downsample: usize,
    pub series: Series,
}

/// Uniform-stride subset of `0..n` of at most `limit` points (unless the
/// events alone exceed it), always keeping the endpoints and `events`.
pub fn downsample_indices(n: usize, limit: usize, events: &[usize]) -> Vec<usize> {
    if n <= limit {
        return (0..n).collect();
    }
    let mut keep: Vec<usize> = events.iter().copied().filter(|&i| i < n).collect();
    keep.push(0);
    keep.push(n - 1);
    keep.sort_unstable();
    keep.dedup();
    let budget = limit.saturating_sub(keep.len()).max(1);
    let stride = n.div_ceil(budget);
    keep.extend((0..n).step_by(stride));
    keep.sort_unstable();
    keep.dedup();
    keep
}

fn build_series(traj: &Trajectory, indices: &[usize]) -> Series {
    let s = |f: fn(&crate::model::FundState) -> f64| indices.iter().map(|&i| f(&traj.states[i])).collect();
    let b = |f: fn(&crate::model::StepBreakdown) -> f64| {
        indices.iter().map(|&i| traj.breakdowns.get(i).map(f)).collect()
    };
    Series {
        step: indices.to_vec(),
        t: s(|x| x.t),
        capital: s(|x| x.capital),
        avg_maturity: s(|x| x.avg_maturity),
        implied: s(|x| x.implied),
        vega: s(|x| x.vega),
        aged_vega: b(|x| x.aged_vega),
        trade: b(|x| x.trade),
        realized_pnl: b(|x| x.realized_pnl),
        implied_pnl: b(|x| x.implied_pnl),
        total_pnl: b(|x| x.total_pnl),
        denom_margin: b(|x| x.denom_margin),
    }
}

pub fn simulate_response(scenario: Scenario, downsample: usize) -> Result<SimulateResponse, ApiError> {
    let traj = simulate(&scenario);
    if traj.termination == Termination::DegenerateDenominator && traj.steps() == 0 {
        let margin = crate::dynamics::degeneracy_margin(&traj.states[0], &scenario.params());
        return Err(Error::DegenerateDenominator { margin }.into());
    }
    let report = classify(&traj, &Thresholds::from(&scenario.guards));
    let mut events: Vec<usize> = report.peaks.iter().map(|p| p.step).collect();
    for g in &report.gaps {
        events.push(g.step);
        events.push(g.step + 1);
    }
    let indices = downsample_indices(traj.states.len(), downsample, &events);
    Ok(SimulateResponse {
        termination: traj.termination,
        steps: traj.steps(),
        negative_implied_step: traj.first_negative_implied(),
        series: build_series(&traj, &indices),
        report,
        downsample,
        scenario,
    })
}

async fn handle_simulate(State(app): State<AppState>, body: Bytes) -> Result<JsonBody, ApiError> {
    let (fields, extras) = split_body(&body, &["downsample"])?;
    let downsample: usize = extra(&extras, "downsample")?.unwrap_or(DEFAULT_DOWNSAMPLE);
    if downsample < 2 {
        return Err(Error::Range { field: "downsample".into(), message: "must be >= 2".into() }.into());
    }
    let scenario = parse_scenario_value(fields)?;
    blocking(&app, move || simulate_response(scenario, downsample).map(|r| JsonBody::encode(&r))).await?
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisRequest {
    param: String,
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default)]
    lo: Option<f64>,
    #[serde(default)]
    hi: Option<f64>,
    #[serde(default)]
    count: Option<usize>,
}

impl AxisRequest {
    fn len(&self) -> usize {
        match &self.values {
            Some(v) => v.len(),
            None => self.count.unwrap_or(0),
        }
    }

    fn into_axis(self) -> Result<Axis, Error> {
        let param: SweepParam = self.param.parse()?;
        match (self.values, self.lo, self.hi, self.count) {
            (Some(values), None, None, None) => Axis::new(param, values),
            (None, Some(lo), Some(hi), Some(count)) => Axis::linspace(param, lo, hi, count),
            _ => Err(Error::InvalidAxis(format!(
                "{}: give either `values` or `lo`, `hi` and `count`",
                self.param
            ))),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SweepResponse {
    pub scenario: Scenario,
    pub axes: Vec<Axis>,
    pub cells: Vec<SweepCell>,
}

async fn handle_sweep(State(app): State<AppState>, body: Bytes) -> Result<JsonBody, ApiError> {
    let (fields, extras) = split_body(&body, &["axes"])?;
    let requests: Vec<AxisRequest> =
        extra(&extras, "axes")?.ok_or_else(|| ApiError::from(Error::InvalidAxis("axes missing".into())))?;
    if requests.is_empty() || requests.len() > 2 {
        return Err(Error::InvalidAxis(format!("expected 1 or 2 axes, got {}", requests.len())).into());
    }
    let cells = requests.iter().fold(1usize, |acc, a| acc.saturating_mul(a.len()));
    if cells > MAX_SWEEP_CELLS {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "CellBudgetExceeded",
            format!("{cells} cells requested, limit is {MAX_SWEEP_CELLS}"),
            Some("axes"),
        ));
    }
    let axes = requests
        .into_iter()
        .map(AxisRequest::into_axis)
        .collect::<Result<Vec<_>, _>>()?;
    debug_assert_eq!(cell_count(&axes), cells);
    let scenario = parse_scenario_value(fields)?;
    blocking(&app, move || {
        let map = sweep(&scenario, &axes, Execution::Parallel)?;
        Ok(JsonBody::encode(&SweepResponse {
            scenario,
            axes: map.axes,
            cells: map.cells,
        }))
    })
    .await?
}

#[derive(Debug, Serialize)]
pub struct CriticalResponse {
    pub kappa: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maturity: Option<f64>,
    pub dt: f64,
    #[serde(flatten)]
    pub critical: CriticalCapital,
}

fn query_f64(q: &HashMap<String, String>, key: &str) -> Result<Option<f64>, ApiError> {
    q.get(key)
        .map(|raw| {
            raw.parse::<f64>().map_err(|_| {
                Error::Schema {
                    path: key.into(),
                    message: format!("`{raw}` is not a number"),
                }
                .into()
            })
        })
        .transpose()
}

pub fn critical_response(q: &HashMap<String, String>) -> Result<CriticalResponse, ApiError> {
    if let Some(unknown) = q.keys().find(|k| !["kappa", "lambda", "maturity", "dt"].contains(&k.as_str())) {
        return Err(Error::Schema { path: unknown.clone(), message: format!("unknown parameter `{unknown}`") }.into());
    }
    let required = |key: &str| -> Result<f64, ApiError> {
        query_f64(q, key)?.ok_or_else(|| Error::Schema { path: key.into(), message: "missing".into() }.into())
    };
    let kappa = required("kappa")?;
    let lambda = required("lambda")?;
    let maturity = query_f64(q, "maturity")?;
    let dt = query_f64(q, "dt")?.unwrap_or(DEFAULT_CRITICAL_DT);
    let params = ModelParams {
        kappa,
        lambda,
        maturity: maturity.unwrap_or(f64::INFINITY),
        dt,
        impact: ImpactModel::Linear,
    };
    let critical = critical_capital(&params, maturity)?;
    Ok(CriticalResponse {
        kappa,
        lambda,
        maturity,
        dt,
        critical,
    })
}

async fn handle_critical(Query(q): Query<HashMap<String, String>>) -> ApiResult<CriticalResponse> {
    critical_response(&q).map(Json)
}

#[derive(Debug, Serialize)]
pub struct LyapunovResponse {
    pub scenario: Scenario,
    pub epsilon: f64,
    pub exponent: f64,
    pub steps: usize,
}

async fn handle_lyapunov(State(app): State<AppState>, body: Bytes) -> Result<JsonBody, ApiError> {
    let (fields, extras) = split_body(&body, &["epsilon"])?;
    let epsilon: f64 = extra(&extras, "epsilon")?.unwrap_or(DEFAULT_EPSILON);
    let scenario = parse_scenario_value(fields)?;
    blocking(&app, move || {
        let est = lyapunov_estimate(&scenario, epsilon)?;
        Ok(JsonBody::encode(&LyapunovResponse {
            scenario,
            epsilon,
            exponent: est.exponent,
            steps: est.steps,
        }))
    })
    .await?
}

async fn handle_health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn no_ui() -> impl IntoResponse {
    (
        StatusCode::NOT_FOUND,
        Html(
            "<!doctype html><title>propsim</title><p>Explorer UI not installed. \
             API: POST /api/simulate, POST /api/sweep, GET /api/critical, \
             POST /api/lyapunov, GET /healthz.</p>",
        ),
    )
}

pub fn router(config: &ServiceConfig) -> Router {
    let api = Router::new()
        .route("/api/simulate", post(handle_simulate))
        .route("/api/sweep", post(handle_sweep))
        .route("/api/critical", get(handle_critical))
        .route("/api/lyapunov", post(handle_lyapunov))
        .route("/healthz", get(handle_health));
    let state = AppState {
        compute: Arc::new(Semaphore::new(config.compute_slots.max(1))),
    };
    match &config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(no_ui),
    }
    .with_state(state)
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("propsim listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(&config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
