use std::path::PathBuf;

use anchorlabel_core::api::{
    CostRequest, ErrorBody, Health, OptimizeRequest, OracleRequest, RunInputs, WeightsRequest,
};
use anchorlabel_core::context::Trace;
use anchorlabel_core::harness::{self, Inputs, RunParams, StepOutcome};
use anchorlabel_core::optimizer::PlacementResult;
use anchorlabel_core::profile::{DocumentProfile, SpatialProfile};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use tower::ServiceExt;

const MICROWAVE_STEP: usize = 7;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn microwave_run() -> RunInputs {
    RunInputs {
        spatial_profile: SpatialProfile::load(fixture("kitchen.json")).unwrap(),
        document_profile: DocumentProfile::load(fixture("t2_document.json")).unwrap(),
        trace: Trace::load(fixture("microwave_fixation.jsonl")).unwrap(),
        params: RunParams::default(),
    }
}

async fn call(method: &str, uri: &str, body: Vec<u8>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    let resp = anchorlabel_server::router().oneshot(req).await.unwrap();
    let status = resp.status();
    (
        status,
        resp.into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec(),
    )
}

async fn post<T: DeserializeOwned>(uri: &str, body: &impl serde::Serialize) -> (StatusCode, T) {
    let (status, bytes) = call("POST", uri, serde_json::to_vec(body).unwrap()).await;
    let parsed = serde_json::from_slice(&bytes)
        .unwrap_or_else(|e| panic!("{status}: {e}: {}", String::from_utf8_lossy(&bytes)));
    (status, parsed)
}

#[tokio::test]
async fn health_reports_ok() {
    let (status, bytes) = call("GET", "/health", Vec::new()).await;
    assert_eq!(status, StatusCode::OK);
    let h: Health = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(h.status, "ok");
}

#[tokio::test]
async fn optimize_matches_the_library() {
    let run = microwave_run();
    let (status, out): (_, StepOutcome) = post(
        "/v1/optimize",
        &OptimizeRequest {
            run: run.clone(),
            step: MICROWAVE_STEP,
        },
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (inputs, params) = run.into_inputs().unwrap();
    let direct = harness::optimize_step(&inputs, &params, MICROWAVE_STEP).unwrap();
    assert_eq!(out, direct);
}

#[tokio::test]
async fn oracle_and_cost_agree() {
    let run = microwave_run();
    let (status, best): (_, PlacementResult) = post(
        "/v1/oracle",
        &OracleRequest {
            run: run.clone(),
            step: MICROWAVE_STEP,
            bound: None,
        },
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let req = CostRequest {
        run,
        step: MICROWAVE_STEP,
        placement: best.best.clone(),
    };
    let (status, cost): (_, anchorlabel_core::cost::CostBreakdown) = post("/v1/cost", &req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(cost, best.breakdown);
}

#[tokio::test]
async fn oracle_bound_is_enforced() {
    let req = OracleRequest {
        run: microwave_run(),
        step: MICROWAVE_STEP,
        bound: Some(1),
    };
    let (status, err): (_, ErrorBody) = post("/v1/oracle", &req).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err.error, "search_space_too_large");
}

#[tokio::test]
async fn domain_errors_are_unprocessable() {
    let req = OptimizeRequest {
        run: microwave_run(),
        step: 99,
    };
    let (status, err): (_, ErrorBody) = post("/v1/optimize", &req).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err.error, "step_out_of_range");
}

#[tokio::test]
async fn malformed_bodies_are_bad_requests() {
    for body in [&b"{"[..], b"[]", br#"{"run": {}, "step": 0}"#] {
        let (status, bytes) = call("POST", "/v1/optimize", body.to_vec()).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        let err: ErrorBody = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(err.error, "json");
    }
    let mut v = serde_json::to_value(OptimizeRequest {
        run: microwave_run(),
        step: 0,
    })
    .unwrap();
    v["extra"] = serde_json::json!(1);
    let (status, _) = call("POST", "/v1/optimize", serde_json::to_vec(&v).unwrap()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_routes_are_not_found() {
    let (status, bytes) = call("GET", "/v2/anything", Vec::new()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let err: ErrorBody = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(err.error, "not_found");
}

#[tokio::test]
async fn weights_follow_the_frames() {
    let frames = Trace::load(fixture("microwave_fixation.jsonl"))
        .unwrap()
        .frames;
    let (status, body): (_, serde_json::Value) = post(
        "/v1/weights",
        &WeightsRequest {
            frames: frames.clone(),
        },
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let got: Vec<f64> = serde_json::from_value(body["weights"].clone()).unwrap();
    assert_eq!(
        got,
        anchorlabel_core::context::frame_weights_of(&frames).unwrap()
    );
    let sum: f64 = got.iter().sum();
    assert!((sum - 1.0).abs() < 1e-9);
}

#[tokio::test]
async fn out_of_order_frames_are_rejected() {
    let mut frames = Trace::load(fixture("microwave_fixation.jsonl"))
        .unwrap()
        .frames;
    frames.swap(0, 1);
    let (status, err): (_, ErrorBody) = post("/v1/weights", &WeightsRequest { frames }).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err.error, "out_of_order_frame");
}

#[tokio::test]
async fn tag_and_synthesize_round_trip() {
    let vocabulary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("vocabulary.json")).unwrap())
            .unwrap();
    let text = std::fs::read_to_string(fixture("t3_recipe.txt")).unwrap();
    let body = serde_json::json!({ "title": "Mac", "text": text, "vocabulary": vocabulary });
    let (status, doc): (_, DocumentProfile) = post("/v1/tag", &body).await;
    assert_eq!(status, StatusCode::OK);
    assert!(!doc.is_empty());
    assert!(doc
        .steps()
        .iter()
        .any(|s| s.key_object_id.as_deref() == Some("microwave")));

    let spatial: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("kitchen.json")).unwrap()).unwrap();
    let script: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("microwave_script.json")).unwrap())
            .unwrap();
    let body = serde_json::json!({ "spatial_profile": spatial, "script": script, "seed": 3 });
    let (status, a): (_, Trace) = post("/v1/synthesize", &body).await;
    assert_eq!(status, StatusCode::OK);
    let (_, b): (_, Trace) = post("/v1/synthesize", &body).await;
    assert_eq!(a, b);
    assert!(!a.frames.is_empty());
}

#[tokio::test]
async fn replay_matches_the_library() {
    let run = microwave_run();
    let mut inputs: Inputs = run.clone().into_inputs().unwrap().0;
    // Replay needs frames for every step; keep only the microwave step.
    let mut keep = inputs.document.steps()[MICROWAVE_STEP].clone();
    keep.index = 0;
    inputs.document = DocumentProfile::new(inputs.document.title.clone(), vec![keep]).unwrap();
    for f in &mut inputs.trace.frames {
        f.step = Some(0);
    }
    let run = RunInputs::from_inputs(inputs.clone(), RunParams::default());
    let (status, report): (_, harness::ReplayReport) = post("/v1/replay", &run).await;
    assert_eq!(status, StatusCode::OK);
    let direct = harness::replay(&inputs, &RunParams::default()).unwrap();
    assert_eq!(report.rows, direct.rows);
    assert_eq!(report.config_digest, direct.config_digest);
}

#[tokio::test]
async fn small_bench_runs_over_http() {
    let cfg = serde_json::json!({ "scenes": 2, "runs": 3, "scene": { "min_cells": 100, "max_cells": 300 } });
    let (status, report): (_, harness::BenchReport) = post("/v1/bench", &cfg).await;
    assert_eq!(status, StatusCode::OK, "{report:?}");
    assert_eq!(report.scenes.len(), 2);
}

#[tokio::test]
async fn spawned_server_answers_over_tcp() {
    let (addr, handle) = anchorlabel_server::spawn("127.0.0.1:0".parse().unwrap())
        .await
        .unwrap();
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    stream
        .write_all(b"GET /health HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut buf = String::new();
    stream.read_to_string(&mut buf).await.unwrap();
    assert!(buf.starts_with("HTTP/1.1 200"), "{buf}");
    assert!(buf.contains("\"ok\""));
    handle.abort();
}
