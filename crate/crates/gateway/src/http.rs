//! JSON over HTTP. Each mutating route maps to exactly one engine command;
//! errors come back as `{error_code, message}` with a 4xx status.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Map, Value};
use socialdao_core::identity::SessionState;
use socialdao_core::ledger::catalog;
use socialdao_core::{Command, Engine, EngineError};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::config::{ConfigError, GatewayConfig};

/// Header carrying an identity session id; it scopes case listings.
pub const SESSION_HEADER: &str = "x-mfssia-session";

pub type SharedEngine = Arc<Mutex<Engine>>;

#[derive(Debug)]
pub struct ApiError(pub EngineError);

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        ApiError(e)
    }
}

pub fn status_for(code: &str) -> StatusCode {
    match code {
        c if c.starts_with("Unknown") && c != "UnknownActor" => StatusCode::NOT_FOUND,
        "BadRequest" | "BadAnswerCount" | "OutOfRange" | "ZeroAmount" | "ZeroWeight" | "InvalidPayload"
        | "BadChallenge" | "BadPolicy" | "EmptySet" | "WrongTokenType" => StatusCode::BAD_REQUEST,
        "AuthRequired" | "SessionNotPassed" | "OracleRejected" | "UnauthorizedReporter" | "NotEligible"
        | "NoGovernanceTokens" | "NotOwner" | "SoulboundViolation" => StatusCode::FORBIDDEN,
        "Storage" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::CONFLICT,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = self.0.code();
        (status_for(code), Json(json!({ "error_code": code, "message": self.0.to_string() }))).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn lock(engine: &SharedEngine) -> MutexGuard<'_, Engine> {
    // A panic inside one request must not wedge the service.
    engine.lock().unwrap_or_else(|p| p.into_inner())
}

fn body_object(body: &Bytes) -> Result<Map<String, Value>, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(Map::new());
    }
    match serde_json::from_slice(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(EngineError::BadRequest("request body must be a JSON object".into()).into()),
        Err(e) => Err(EngineError::BadRequest(format!("request body: {e}")).into()),
    }
}

fn run(engine: &SharedEngine, op: &str, args: Value) -> ApiResult {
    let cmd = Command::parse(op, args)?;
    Ok(Json(lock(engine).execute(cmd)?))
}

/// Run `op` with the request body plus path parameters as arguments.
fn run_with(engine: &SharedEngine, op: &str, body: &Bytes, extra: &[(&str, String)]) -> ApiResult {
    let mut args = body_object(body)?;
    for (k, v) in extra {
        args.insert(k.to_string(), Value::String(v.clone()));
    }
    run(engine, op, Value::Object(args))
}

macro_rules! body_op {
    ($name:ident, $op:literal) => {
        async fn $name(State(e): State<SharedEngine>, body: Bytes) -> ApiResult {
            run_with(&e, $op, &body, &[])
        }
    };
    ($name:ident, $op:literal, $param:literal) => {
        async fn $name(State(e): State<SharedEngine>, Path(id): Path<String>, body: Bytes) -> ApiResult {
            run_with(&e, $op, &body, &[($param, id)])
        }
    };
}

body_op!(create_challenge_set, "create_challenge_set");
body_op!(open_session, "open_session");
body_op!(submit_response, "submit_response", "session_id");
body_op!(evaluate_session, "evaluate_session", "session_id");
body_op!(onboard, "onboard");
body_op!(offboard, "offboard");
body_op!(terminate, "terminate");
body_op!(reward, "reward");
body_op!(mint, "mint");
body_op!(transfer, "transfer");
body_op!(propose, "propose");
body_op!(vote, "vote", "proposal_id");
body_op!(tally, "tally", "proposal_id");
body_op!(execute, "execute", "proposal_id");
body_op!(report_incident, "report_incident");
body_op!(advance_case, "advance_case", "case_id");
body_op!(attach_evidence, "attach_evidence", "case_id");
body_op!(assemble_team, "assemble_response_team", "case_id");
body_op!(diagnose_legal, "diagnose_legal_aid");
body_op!(assess_mental_health, "assess_mental_health");
body_op!(assess_situation, "assess_situation");
body_op!(agent_pass_through, "agent_pass_through");
body_op!(verify_ledger, "verify_ledger");
body_op!(append_transaction, "append_transaction");
body_op!(seal_ledger, "seal_ledger");
body_op!(advance_clock, "advance_clock");
body_op!(set_oracle_verdict, "set_oracle_verdict");

async fn diagnose_sextortion(State(e): State<SharedEngine>, body: Bytes) -> ApiResult {
    run(&e, "diagnose_sextortion", Value::Object(body_object(&body)?))
}

async fn get_session(State(e): State<SharedEngine>, Path(id): Path<String>) -> ApiResult {
    run(&e, "get_session", json!({ "session_id": id }))
}

async fn list_roles(State(e): State<SharedEngine>) -> ApiResult {
    run(&e, "list_roles", json!({}))
}

async fn role_information(
    State(e): State<SharedEngine>,
    Path(role): Path<String>,
    Query(q): Query<BTreeMap<String, String>>,
) -> ApiResult {
    let band = q.get("band").cloned().unwrap_or_else(|| "Low".into());
    run(&e, "role_information", json!({ "role_name": role, "band": band }))
}

async fn balances(State(e): State<SharedEngine>, Path(actor): Path<String>) -> ApiResult {
    run(&e, "balance", json!({ "actor_id": actor }))
}

async fn get_proposal(State(e): State<SharedEngine>, Path(id): Path<String>) -> ApiResult {
    run(&e, "get_proposal", json!({ "proposal_id": id }))
}

async fn get_case(State(e): State<SharedEngine>, Path(id): Path<String>) -> ApiResult {
    run(&e, "case_report", json!({ "case_id": id }))
}

/// Without a session header every case is listed; with one, the
/// session must have passed and its actor's visibility applies.
async fn list_cases(State(e): State<SharedEngine>, headers: HeaderMap) -> ApiResult {
    let viewer = match headers.get(SESSION_HEADER) {
        None => None,
        Some(v) => {
            let id = v.to_str().map_err(|_| EngineError::BadRequest(format!("{SESSION_HEADER} is not ASCII")))?;
            let engine = lock(&e);
            let s = engine.identity().session(id).map_err(EngineError::from)?;
            if s.state != SessionState::Passed {
                return Err(EngineError::Case(socialdao_core::casework::CaseError::SessionNotPassed(id.into())).into());
            }
            Some(s.actor_id.clone())
        }
    };
    run(&e, "list_cases", json!({ "viewer": viewer }))
}

async fn query_ledger(State(e): State<SharedEngine>, Query(q): Query<BTreeMap<String, String>>) -> ApiResult {
    let mut args = Map::new();
    for (k, v) in q {
        let value = match k.as_str() {
            "from" | "to" => Value::from(v.parse::<u64>().map_err(|_| EngineError::BadRequest(format!("{k} must be an integer")))?),
            _ => Value::String(v),
        };
        args.insert(k, value);
    }
    run(&e, "query_ledger", Value::Object(args))
}

async fn health(State(e): State<SharedEngine>) -> Json<Value> {
    let engine = lock(&e);
    Json(json!({ "status": "ok", "ledger_len": engine.ledger().len() }))
}

async fn catalog_table() -> Json<Value> {
    Json(json!(catalog()))
}

async fn export_state(State(e): State<SharedEngine>) -> Response {
    let bytes = lock(&e).export_bytes();
    ([(axum::http::header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

async fn import_state(State(e): State<SharedEngine>, body: Bytes) -> ApiResult {
    let receipt = lock(&e).import_bytes(&body)?;
    Ok(Json(json!(receipt)))
}

async fn fallback() -> ApiError {
    ApiError(EngineError::BadRequest("no such route".into()))
}

pub fn router(engine: SharedEngine) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/catalog", get(catalog_table))
        .route("/auth/challenge-sets", post(create_challenge_set))
        .route("/auth/sessions", post(open_session))
        .route("/auth/sessions/{id}", get(get_session))
        .route("/auth/sessions/{id}/responses", post(submit_response))
        .route("/auth/sessions/{id}/evaluate", post(evaluate_session))
        .route("/roles", get(list_roles))
        .route("/roles/onboard", post(onboard))
        .route("/roles/offboard", post(offboard))
        .route("/roles/terminate", post(terminate))
        .route("/roles/reward", post(reward))
        .route("/roles/{role}/information", get(role_information))
        .route("/tokens/mint", post(mint))
        .route("/tokens/transfer", post(transfer))
        .route("/tokens/{actor}", get(balances))
        .route("/governance/proposals", post(propose))
        .route("/governance/proposals/{id}", get(get_proposal))
        .route("/governance/proposals/{id}/votes", post(vote))
        .route("/governance/proposals/{id}/tally", post(tally))
        .route("/governance/proposals/{id}/execute", post(execute))
        .route("/cases", post(report_incident).get(list_cases))
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/events", post(advance_case))
        .route("/cases/{id}/evidence", post(attach_evidence))
        .route("/cases/{id}/team", post(assemble_team))
        .route("/agents/diagnose/sextortion", post(diagnose_sextortion))
        .route("/agents/diagnose/legal", post(diagnose_legal))
        .route("/agents/pass-through", post(agent_pass_through))
        .route("/assessments/mental-health", post(assess_mental_health))
        .route("/assessments/situation", post(assess_situation))
        .route("/ledger", get(query_ledger))
        .route("/ledger/verify", post(verify_ledger))
        .route("/ledger/append", post(append_transaction))
        .route("/ledger/seal", post(seal_ledger))
        .route("/clock/advance", post(advance_clock))
        .route("/oracle/verdicts", post(set_oracle_verdict))
        .route("/state/export", get(export_state))
        .route("/state/import", post(import_state))
        .fallback(fallback)
        .with_state(engine)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("port already in use: {0}")]
    PortInUse(SocketAddr),
    #[error(transparent)]
    BadConfig(#[from] ConfigError),
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl ServeError {
    pub fn code(&self) -> &'static str {
        match self {
            ServeError::PortInUse(_) => "PortInUse",
            ServeError::BadConfig(_) => "BadConfig",
            ServeError::Engine(e) => e.code(),
            ServeError::Io(_) => "Io",
        }
    }
}

/// A running service. Dropping it without [`ServerHandle::shutdown`]
/// leaves the server running until the runtime stops.
pub struct ServerHandle {
    pub addr: SocketAddr,
    pub engine: SharedEngine,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServerHandle {
    /// Stop accepting requests, drain in-flight ones, flush state.
    pub async fn shutdown(mut self) -> Result<(), ServeError> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        self.task.await.map_err(|e| std::io::Error::other(e.to_string()))??;
        lock(&self.engine).flush()?;
        Ok(())
    }

    /// Wait until the server exits on its own.
    pub async fn wait(self) -> Result<(), ServeError> {
        let engine = self.engine.clone();
        self.task.await.map_err(|e| std::io::Error::other(e.to_string()))??;
        lock(&engine).flush()?;
        Ok(())
    }
}

/// Bind and start serving. Port 0 picks a free port; see `handle.addr`.
pub async fn serve(config: &GatewayConfig) -> Result<ServerHandle, ServeError> {
    let addr = config.addr()?;
    let engine = Engine::open(config.engine_config()?)?;
    serve_engine(addr, engine).await
}

pub async fn serve_engine(addr: SocketAddr, engine: Engine) -> Result<ServerHandle, ServeError> {
    let listener = TcpListener::bind(addr).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => ServeError::PortInUse(addr),
        _ => ServeError::Io(e),
    })?;
    let addr = listener.local_addr()?;
    let engine: SharedEngine = Arc::new(Mutex::new(engine));
    let app = router(engine.clone());
    let (stop, stopped) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stopped.await;
            })
            .await
    });
    tracing::info!(%addr, "listening");
    Ok(ServerHandle { addr, engine, stop: Some(stop), task })
}
