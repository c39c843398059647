//! Typed client for the anchorlabel HTTP service.

use anchorlabel_core::api::{
    CostRequest, ErrorBody, Health, OptimizeRequest, OracleRequest, RunInputs, SynthesizeRequest,
    TagRequest, WeightsRequest, WeightsResponse,
};
use anchorlabel_core::context::{ContextFrame, Trace};
use anchorlabel_core::cost::CostBreakdown;
use anchorlabel_core::harness::{BenchConfig, BenchReport, ReplayReport, StepOutcome};
use anchorlabel_core::optimizer::PlacementResult;
use anchorlabel_core::profile::DocumentProfile;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),

    /// The service answered with its error body.
    #[error("{status}: {} ({})", .body.message, .body.error)]
    Api { status: u16, body: ErrorBody },

    #[error("unexpected {status} response: {detail}")]
    Unexpected { status: u16, detail: String },
}

impl ClientError {
    /// The service's error kind, when it sent one.
    pub fn kind(&self) -> Option<&str> {
        match self {
            ClientError::Api { body, .. } => Some(&body.error),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        let base = base.into().trim_end_matches('/').to_string();
        Client {
            base,
            http: reqwest::Client::new(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T> {
        let status = resp.status();
        let bytes = resp.bytes().await?;
        if status.is_success() {
            return serde_json::from_slice(&bytes).map_err(|e| ClientError::Unexpected {
                status: status.as_u16(),
                detail: e.to_string(),
            });
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(body) => Err(ClientError::Api {
                status: status.as_u16(),
                body,
            }),
            Err(_) => Err(ClientError::Unexpected {
                status: status.as_u16(),
                detail: String::from_utf8_lossy(&bytes).into_owned(),
            }),
        }
    }

    async fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        body: &Req,
    ) -> Result<Resp> {
        // Serialized here so float formatting matches the service exactly.
        let bytes = serde_json::to_vec(body).map_err(|e| ClientError::Unexpected {
            status: 0,
            detail: e.to_string(),
        })?;
        let resp = self
            .http
            .post(format!("{}{path}", self.base))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(bytes)
            .send()
            .await?;
        Self::decode(resp).await
    }

    pub async fn health(&self) -> Result<Health> {
        let resp = self
            .http
            .get(format!("{}/health", self.base))
            .send()
            .await?;
        Self::decode(resp).await
    }

    pub async fn optimize(&self, req: &OptimizeRequest) -> Result<StepOutcome> {
        self.post("/v1/optimize", req).await
    }

    pub async fn oracle(&self, req: &OracleRequest) -> Result<PlacementResult> {
        self.post("/v1/oracle", req).await
    }

    pub async fn cost(&self, req: &CostRequest) -> Result<CostBreakdown> {
        self.post("/v1/cost", req).await
    }

    pub async fn replay(&self, run: &RunInputs) -> Result<ReplayReport> {
        self.post("/v1/replay", run).await
    }

    pub async fn bench(&self, cfg: &BenchConfig) -> Result<BenchReport> {
        self.post("/v1/bench", cfg).await
    }

    pub async fn tag(&self, req: &TagRequest) -> Result<DocumentProfile> {
        self.post("/v1/tag", req).await
    }

    pub async fn weights(&self, frames: &[ContextFrame]) -> Result<Vec<f64>> {
        let resp: WeightsResponse = self
            .post(
                "/v1/weights",
                &WeightsRequest {
                    frames: frames.to_vec(),
                },
            )
            .await?;
        Ok(resp.weights)
    }

    pub async fn synthesize(&self, req: &SynthesizeRequest) -> Result<Trace> {
        self.post("/v1/synthesize", req).await
    }
}
