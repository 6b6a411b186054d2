//! HTTP server exposing a table oracle over the sidecar protocol, for
//! wiring tests and offline runs of remote-backend configurations.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use attrib_eval::backends::protocol::{
    ClaimSplitRequest, ClaimSplitResponse, HealthResponse, NliRequest, NliResponse, WireVerdict,
};
use attrib_eval::backends::{ClaimSplitter, EntailmentBackend, TableOracle};
use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

type Rejection = (StatusCode, Json<Value>);

fn reject(msg: String) -> Rejection {
    (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "error": msg })))
}

async fn nli(State(oracle): State<Arc<TableOracle>>, Json(req): Json<NliRequest>) -> Result<Json<NliResponse>, Rejection> {
    if let Some(i) = req.pairs.iter().position(|p| p.hypothesis.trim().is_empty()) {
        return Err(reject(format!("pair {i}: empty hypothesis")));
    }
    let verdicts = oracle.classify_batch(&req.pairs).map_err(|e| reject(e.to_string()))?;
    Ok(Json(NliResponse {
        verdicts: verdicts.into_iter().map(WireVerdict::from).collect(),
        warnings: vec![],
    }))
}

async fn claimsplit(
    State(oracle): State<Arc<TableOracle>>,
    Json(req): Json<ClaimSplitRequest>,
) -> Result<Json<ClaimSplitResponse>, Rejection> {
    if let Some(i) = req.sentences.iter().position(|s| s.trim().is_empty()) {
        return Err(reject(format!("sentence {i} is empty")));
    }
    let claims = oracle.split_batch(&req.sentences).map_err(|e| reject(e.to_string()))?;
    Ok(Json(ClaimSplitResponse { claims, warnings: vec![] }))
}

async fn healthz(State(oracle): State<Arc<TableOracle>>) -> Json<HealthResponse> {
    let mut models = BTreeMap::new();
    models.insert("nli".to_string(), EntailmentBackend::fingerprint(oracle.as_ref()));
    models.insert("claimsplit".to_string(), ClaimSplitter::fingerprint(oracle.as_ref()));
    Json(HealthResponse {
        status: "ok".into(),
        models,
    })
}

pub fn oracle_router(oracle: Arc<TableOracle>) -> Router {
    Router::new()
        .route("/nli", post(nli))
        .route("/claimsplit", post(claimsplit))
        .route("/healthz", get(healthz))
        .with_state(oracle)
}

/// Serve until Ctrl-C. The bound address is printed on stdout first.
pub async fn serve(addr: SocketAddr, oracle: TableOracle) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, oracle_router(Arc::new(oracle)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
