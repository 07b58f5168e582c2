//! HTTP interface.

use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::{DateTime, Duration, Utc};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::RwLock;

use crate::state::{Clock, LogRecord, MapService, ServiceConfig, StateError, SystemClock};
use crate::types::{CommunicationEvent, CommunicationPlan, Mode, ParticipantProfile, Window};

/// Server settings; every flag can also come from the environment.
#[derive(Clone, Debug, clap::Args)]
pub struct ServerConfig {
    #[arg(long, env = "FLOW_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "FLOW_BIND", default_value = "127.0.0.1")]
    pub bind: IpAddr,
    /// Length of the trailing live window in minutes.
    #[arg(long, env = "FLOW_LIVE_WINDOW", default_value_t = 60)]
    pub live_window: i64,
    /// Tolerance for scheduled occurrences in minutes.
    #[arg(long, env = "FLOW_GRACE", default_value_t = 15)]
    pub grace: i64,
    /// Directory holding the event log.
    #[arg(long, env = "FLOW_DATA_DIR", default_value = "flow-data")]
    pub data_dir: PathBuf,
    /// Shared bearer token; when set, every endpoint but /health requires it.
    #[arg(long, env = "FLOW_TOKEN")]
    pub token: Option<String>,
}

impl ServerConfig {
    pub fn service_config(&self) -> ServiceConfig {
        ServiceConfig {
            live_window: Duration::minutes(self.live_window),
            grace: Duration::minutes(self.grace),
        }
    }
}

pub struct AppState {
    /// Writers queue on the lock; readers see a consistent state.
    pub service: RwLock<MapService>,
    pub token: Option<String>,
}

pub type Shared = Arc<AppState>;

struct ApiError(StatusCode, serde_json::Value);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<StateError> for ApiError {
    fn from(e: StateError) -> Self {
        let status = match &e {
            StateError::Conflict(_) => StatusCode::CONFLICT,
            StateError::Io(_) | StateError::CorruptLog { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let mut body = json!({ "error": e.to_string() });
        if let StateError::UnknownParticipant(id) | StateError::UnknownPartner(id) = &e {
            body["unknown"] = json!(id);
        }
        ApiError(status, body)
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, json!({ "error": msg.into() }))
}

/// Parses a JSON body, reporting errors in the API's error format.
fn body<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ApiError> {
    serde_json::from_str(text).map_err(|e| bad_request(format!("invalid body: {e}")))
}

async fn require_token(State(app): State<Shared>, req: Request, next: Next) -> Response {
    if let Some(token) = &app.token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return ApiError(
                StatusCode::UNAUTHORIZED,
                json!({ "error": "missing or wrong bearer token" }),
            )
            .into_response();
        }
    }
    next.run(req).await
}

async fn health(State(app): State<Shared>) -> Json<serde_json::Value> {
    let svc = app.service.read().await;
    Json(json!({
        "status": "ok",
        "participants": svc.state.participants.len(),
        "events": svc.state.events.len(),
    }))
}

async fn post_event(
    State(app): State<Shared>,
    text: String,
) -> Result<Json<serde_json::Value>, ApiError> {
    let event: CommunicationEvent = body(&text)?;
    let id = event.id.clone();
    let outcome = app
        .service
        .write()
        .await
        .submit(LogRecord::Event { event })?;
    Ok(Json(json!({ "id": id, "outcome": outcome })))
}

async fn put_participant(
    State(app): State<Shared>,
    Path(id): Path<String>,
    text: String,
) -> Result<Json<serde_json::Value>, ApiError> {
    let profile: ParticipantProfile = body(&text)?;
    if profile.id != id {
        return Err(bad_request(format!(
            "path id `{id}` differs from body id `{}`",
            profile.id
        )));
    }
    let outcome = app
        .service
        .write()
        .await
        .submit(LogRecord::Participant { profile })?;
    Ok(Json(json!({ "id": id, "outcome": outcome })))
}

async fn get_participants(State(app): State<Shared>) -> Json<Vec<ParticipantProfile>> {
    Json(
        app.service
            .read()
            .await
            .state
            .participants
            .values()
            .cloned()
            .collect(),
    )
}

async fn put_soll_map(
    State(app): State<Shared>,
    text: String,
) -> Result<Json<serde_json::Value>, ApiError> {
    let outcome = app
        .service
        .write()
        .await
        .submit(LogRecord::SollMap { text })?;
    Ok(Json(json!({ "outcome": outcome })))
}

async fn put_plan(
    State(app): State<Shared>,
    text: String,
) -> Result<Json<serde_json::Value>, ApiError> {
    let plan: CommunicationPlan = body(&text)?;
    let outcome = app.service.write().await.submit(LogRecord::Plan { plan })?;
    Ok(Json(json!({ "outcome": outcome })))
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeParam {
    Live,
    History,
}

#[derive(Deserialize)]
struct WindowQuery {
    #[serde(default)]
    mode: Option<ModeParam>,
    #[serde(default)]
    start: Option<DateTime<Utc>>,
    #[serde(default)]
    end: Option<DateTime<Utc>>,
}

impl WindowQuery {
    fn window(&self) -> Result<Option<Window>, ApiError> {
        match (self.start, self.end) {
            (Some(s), Some(e)) if e < s => Err(bad_request("window ends before it starts")),
            (Some(s), Some(e)) => Ok(Some(Window::new(s, e))),
            (None, None) => Ok(None),
            _ => Err(bad_request("give both `start` and `end`")),
        }
    }
}

/// Serialized by hand so the bytes depend only on state and window.
async fn get_snapshot(
    State(app): State<Shared>,
    Query(q): Query<WindowQuery>,
) -> Result<Response, ApiError> {
    let mode = match q.mode {
        Some(ModeParam::History) => Mode::History,
        _ => Mode::Live,
    };
    let window = q.window()?;
    if mode == Mode::History && window.is_none() {
        return Err(bad_request("history snapshots need `start` and `end`"));
    }
    let snap = app.service.read().await.snapshot(mode, window);
    let bytes = serde_json::to_vec(&snap).expect("snapshots serialize");
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn get_conformance(
    State(app): State<Shared>,
    Query(q): Query<WindowQuery>,
) -> Result<Response, ApiError> {
    let svc = app.service.read().await;
    let window = q.window()?.unwrap_or_else(|| svc.live_window());
    Ok(Json(svc.conformance(&window)).into_response())
}

pub fn router(app: Shared) -> Router {
    let guarded = Router::new()
        .route("/events", post(post_event))
        .route("/snapshot", get(get_snapshot))
        .route("/participants", get(get_participants))
        .route("/participants/{id}", put(put_participant))
        .route("/soll-map", put(put_soll_map))
        .route("/plan", put(put_plan))
        .route("/conformance", get(get_conformance))
        .route_layer(middleware::from_fn_with_state(app.clone(), require_token));
    Router::new()
        .route("/health", get(health))
        .merge(guarded)
        .with_state(app)
}

pub fn app_state(service: MapService, token: Option<String>) -> Shared {
    Arc::new(AppState {
        service: RwLock::new(service),
        token,
    })
}

/// Replays the log in `config.data_dir` and serves until interrupted.
pub async fn serve(config: ServerConfig) -> anyhow::Result<()> {
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let service = MapService::open(&config.data_dir, config.service_config(), clock)?;
    eprintln!(
        "replayed {} participants and {} events from {}",
        service.state.participants.len(),
        service.state.events.len(),
        config.data_dir.display()
    );
    let app = router(app_state(service, config.token.clone()));
    let addr = SocketAddr::new(config.bind, config.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
