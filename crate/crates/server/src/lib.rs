//! HTTP/JSON front end for the placement engine.
//!
//! Every route takes and returns the types in [`anchorlabel_core::api`] and
//! [`anchorlabel_core::harness`]. Computation runs on the blocking pool.

use std::net::SocketAddr;

use anchorlabel_core::api::{
    CostRequest, ErrorBody, Health, OptimizeRequest, OracleRequest, RunInputs, SynthesizeRequest,
    TagRequest, WeightsRequest, WeightsResponse,
};
use anchorlabel_core::context::{frame_weights, generate_synthetic_trace, FrameWindow};
use anchorlabel_core::harness::{self, BenchConfig};
use anchorlabel_core::optimizer::DEFAULT_ORACLE_BOUND;
use anchorlabel_core::Error;
use axum::body::Bytes;
use axum::extract::DefaultBodyLimit;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

/// Request bodies carry whole traces; allow up to 256 MiB.
pub const BODY_LIMIT: usize = 256 * 1024 * 1024;

pub fn router() -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/optimize", post(optimize))
        .route("/v1/oracle", post(oracle))
        .route("/v1/cost", post(cost))
        .route("/v1/replay", post(replay))
        .route("/v1/bench", post(bench))
        .route("/v1/tag", post(tag))
        .route("/v1/weights", post(weights))
        .route("/v1/synthesize", post(synthesize))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
}

/// Serves [`router`] on an already bound listener until the task is dropped.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

/// Binds `addr` (port 0 picks a free port) and serves in the background.
pub async fn spawn(
    addr: SocketAddr,
) -> std::io::Result<(SocketAddr, JoinHandle<std::io::Result<()>>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tracing::info!(%local, "listening");
    Ok((local, tokio::spawn(serve(listener))))
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.to_string(),
                message: message.into(),
            },
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } | Error::Csv(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.kind(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(kind = %self.body.error, "{}", self.body.message);
        } else {
            tracing::debug!(kind = %self.body.error, "{}", self.body.message);
        }
        (self.status, Json(self.body)).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "json", e.to_string()))
}

/// Parses the body, then runs `work` on the blocking pool.
async fn compute<Req, Resp, F>(body: Bytes, work: F) -> Result<Json<Resp>, ApiError>
where
    Req: DeserializeOwned + Send + 'static,
    Resp: Serialize + Send + 'static,
    F: FnOnce(Req) -> anchorlabel_core::Result<Resp> + Send + 'static,
{
    let req: Req = parse(&body)?;
    match tokio::task::spawn_blocking(move || work(req)).await {
        Ok(r) => Ok(Json(r?)),
        Err(e) => Err(ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            e.to_string(),
        )),
    }
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn optimize(body: Bytes) -> Result<impl IntoResponse, ApiError> {
    compute(body, |r: OptimizeRequest| {
        let (inputs, params) = r.run.into_inputs()?;
        harness::optimize_step(&inputs, &params, r.step)
    })
    .await
}

async fn oracle(body: Bytes) -> Result<impl IntoResponse, ApiError> {
    compute(body, |r: OracleRequest| {
        let (inputs, params) = r.run.into_inputs()?;
        harness::oracle_step(
            &inputs,
            &params,
            r.step,
            r.bound.unwrap_or(DEFAULT_ORACLE_BOUND),
        )
    })
    .await
}

async fn cost(body: Bytes) -> Result<impl IntoResponse, ApiError> {
    compute(body, |r: CostRequest| {
        let (inputs, params) = r.run.into_inputs()?;
        harness::evaluate_placement(&inputs, &params, r.step, &r.placement)
    })
    .await
}

async fn replay(body: Bytes) -> Result<impl IntoResponse, ApiError> {
    compute(body, |r: RunInputs| {
        let (inputs, params) = r.into_inputs()?;
        harness::replay(&inputs, &params)
    })
    .await
}

async fn bench(body: Bytes) -> Result<impl IntoResponse, ApiError> {
    compute(body, |cfg: BenchConfig| harness::run_bench(&cfg)).await
}

async fn tag(body: Bytes) -> Result<impl IntoResponse, ApiError> {
    compute(body, |r: TagRequest| {
        Ok(harness::tag_text(
            &r.title,
            &r.text,
            &r.vocabulary,
            r.available.as_ref(),
        ))
    })
    .await
}

async fn weights(body: Bytes) -> Result<impl IntoResponse, ApiError> {
    compute(body, |r: WeightsRequest| {
        let window = FrameWindow::from_frames(&r.frames, r.frames.len().max(1))?;
        Ok(WeightsResponse {
            weights: frame_weights(&window)?,
        })
    })
    .await
}

async fn synthesize(body: Bytes) -> Result<impl IntoResponse, ApiError> {
    compute(body, |r: SynthesizeRequest| {
        generate_synthetic_trace(&r.script, &r.spatial_profile, r.seed)
    })
    .await
}
