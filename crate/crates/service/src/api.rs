//! JSON routes of the reader service.
//!
//! | Method | Path | Success |
//! |---|---|---|
//! | POST | `/users/{id}/sessions` | 201, the open session |
//! | GET | `/users/{id}/sessions/current` | 200, the open session |
//! | POST | `/users/{id}/sessions/current/clicks` | 204 |
//! | POST | `/users/{id}/sessions/current/end` | 200, the session's metrics |
//! | GET | `/users/{id}/feeds` | 200, subscribed sources |
//! | POST | `/users/{id}/feeds` | 201 (200 if already subscribed) |
//! | DELETE | `/users/{id}/feeds/{feed_id}` | 204 |
//! | POST | `/users/{id}/feeds/import-opml` | 200, added sources |
//! | GET | `/users/{id}/metrics` | 200, per-session metrics and trends |
//! | GET | `/users/{id}/profile` | 200, the latest profile snapshot |
//!
//! Errors carry `{"error": {"code": ..., "message": ...}}`. Unknown request
//! fields are ignored.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use feedrank_core::eval::{linear_fit, SessionMetrics};
use feedrank_core::{cosine_score, rank_candidates, Candidate, Execution, ModeKind, Tokenizer};
use feedrank_ingest::{import_opml, FeedSource};
use feedrank_store::{OpenSession, ProfileSnapshot, Store, StoreError};
use serde::{Deserialize, Serialize};
use tokio::sync::Notify;
use tower_http::trace::TraceLayer;
use url::Url;

use crate::config::ServiceConfig;
use crate::pool::candidate_pool;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub config: Arc<ServiceConfig>,
    /// Wakes the poller early, e.g. after a new subscription.
    pub poll_now: Arc<Notify>,
}

impl AppState {
    pub fn new(store: Arc<Store>, config: ServiceConfig) -> Self {
        Self {
            store,
            config: Arc::new(config),
            poll_now: Arc::new(Notify::new()),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route(
            "/healthz",
            get(|| async { Json(serde_json::json!({"status": "ok"})) }),
        )
        .route("/users/{id}/sessions", post(start_session))
        .route("/users/{id}/sessions/current", get(current_session))
        .route("/users/{id}/sessions/current/clicks", post(click))
        .route("/users/{id}/sessions/current/end", post(end_session))
        .route("/users/{id}/feeds", get(list_feeds).post(add_feed))
        .route("/users/{id}/feeds/import-opml", post(import_feeds))
        .route("/users/{id}/feeds/{feed_id}", delete(remove_feed))
        .route("/users/{id}/metrics", get(metrics))
        .route("/users/{id}/profile", get(profile))
        .layer(TraceLayer::new_for_http())
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let (status, code) = match &e {
            StoreError::Io { .. } => (StatusCode::SERVICE_UNAVAILABLE, "storage_unavailable"),
            StoreError::Corrupt { .. } | StoreError::Encode(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "storage_corrupt")
            }
            StoreError::InvalidId(_) => (StatusCode::BAD_REQUEST, "invalid_id"),
            StoreError::SessionAlreadyOpen { .. } => (StatusCode::CONFLICT, "session_open"),
            StoreError::Conflict { .. } => (StatusCode::CONFLICT, "conflict"),
            StoreError::NoOpenSession(_) => (StatusCode::NOT_FOUND, "no_open_session"),
            StoreError::NotOffered(_) => (StatusCode::UNPROCESSABLE_ENTITY, "not_offered"),
            StoreError::InvalidSession(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_session"),
            StoreError::UnknownFeed(_) => (StatusCode::NOT_FOUND, "unknown_feed"),
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "storage failure");
        }
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs storage work off the async executor.
async fn blocking<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    F: FnOnce(&Store) -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    let store = Arc::clone(&state.store);
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

#[derive(Debug, Default, Deserialize)]
pub struct StartRequest {
    #[serde(default)]
    pub mode: ModeKind,
    /// Shuffle seed for `random`; drawn from the clock when absent.
    pub seed: Option<u64>,
}

async fn start_session(
    State(state): State<AppState>,
    Path(user): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<OpenSession>)> {
    // An empty body asks for the default page.
    let req: StartRequest = if body.iter().all(u8::is_ascii_whitespace) {
        StartRequest::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))?
    };
    let page_size = state.config.ranking.page_size;
    let horizon = chrono::Duration::days(i64::from(state.config.ranking.item_horizon_days));
    let session = blocking(&state, move |store| {
        if let Some(open) = store.current_session(&user)? {
            return Err(StoreError::SessionAlreadyOpen {
                user_id: user,
                session_id: open.session_id,
            }
            .into());
        }
        let now = Utc::now();
        let seed = req
            .seed
            .unwrap_or_else(|| now.timestamp_nanos_opt().unwrap_or_default() as u64);
        let profile = store.load_profile(&user)?;
        let tokenizer = &store.options().tokenizer;
        let candidates: Vec<Candidate> = candidate_pool(store, &user, now, page_size, horizon)?
            .into_iter()
            .map(|item| Candidate::new(item, tokenizer))
            .collect();
        let offered = rank_candidates(
            &profile.vector,
            &candidates,
            req.mode.with_seed(seed),
            page_size,
            Execution::default(),
        );
        Ok(store.open_session(&user, req.mode.with_seed(seed), offered, now)?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn current_session(
    State(state): State<AppState>,
    Path(user): Path<String>,
) -> ApiResult<Json<OpenSession>> {
    let session = blocking(&state, move |store| {
        store
            .current_session(&user)?
            .ok_or_else(|| StoreError::NoOpenSession(user).into())
    })
    .await?;
    Ok(Json(session))
}

#[derive(Debug, Deserialize)]
pub struct ClickRequest {
    pub hyperlink: String,
}

async fn click(
    State(state): State<AppState>,
    Path(user): Path<String>,
    body: Result<Json<ClickRequest>, JsonRejection>,
) -> ApiResult<StatusCode> {
    let Json(req) = body?;
    blocking(&state, move |store| {
        Ok(store.record_click(&user, &req.hyperlink, Utc::now())?)
    })
    .await?;
    Ok(StatusCode::NO_CONTENT)
}

/// Metrics of one committed session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: u64,
    pub ended_at: DateTime<Utc>,
    pub profile_version_before: u64,
    pub profile_version_after: u64,
    #[serde(flatten)]
    pub metrics: SessionMetrics,
}

/// Metrics of `record`. Every mode is judged by the cosine between each
/// offered headline and the profile the session started from, so binary and
/// random pages are measured on the same scale as cosine ones.
fn summarize(
    record: &feedrank_store::SessionRecord,
    history: &[ProfileSnapshot],
    tokenizer: &Tokenizer,
) -> ApiResult<SessionSummary> {
    let internal = |m: String| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "invalid_record", m);
    let profile = history
        .get(record.profile_version_before as usize)
        .ok_or_else(|| {
            internal(format!(
                "profile version {} missing",
                record.profile_version_before
            ))
        })?;
    let judged: Vec<(&str, f64)> = record
        .offered
        .iter()
        .map(|s| {
            let headline = tokenizer.vectorize(&s.item.headline);
            (
                s.item.hyperlink.as_str(),
                cosine_score(&profile.vector, &headline),
            )
        })
        .collect();
    let metrics = SessionMetrics::compute(record.session_id as usize, record.mode, &judged, &record.chosen)
        .map_err(|e| internal(e.to_string()))?;
    Ok(SessionSummary {
        session_id: record.session_id,
        ended_at: record.ended_at,
        profile_version_before: record.profile_version_before,
        profile_version_after: record.profile_version_after,
        metrics,
    })
}

async fn end_session(
    State(state): State<AppState>,
    Path(user): Path<String>,
) -> ApiResult<Json<SessionSummary>> {
    let summary = blocking(&state, move |store| {
        let record = store.end_session(&user, None, Utc::now())?;
        summarize(
            &record,
            &store.profile_history(&user)?,
            &store.options().tokenizer,
        )
    })
    .await?;
    Ok(Json(summary))
}

#[derive(Debug, Deserialize)]
pub struct AddFeedRequest {
    pub url: String,
    pub title: Option<String>,
}

fn parse_feed_url(raw: &str) -> ApiResult<Url> {
    let url = Url::parse(raw.trim()).map_err(|e| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_url",
            format!("{raw:?}: {e}"),
        )
    })?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_url",
            format!("{raw:?} is not an http(s) URL"),
        ));
    }
    Ok(url)
}

async fn list_feeds(
    State(state): State<AppState>,
    Path(user): Path<String>,
) -> ApiResult<Json<Vec<FeedSource>>> {
    let feeds = blocking(&state, move |store| Ok(store.user_feeds(&user)?)).await?;
    Ok(Json(feeds))
}

async fn add_feed(
    State(state): State<AppState>,
    Path(user): Path<String>,
    body: Result<Json<AddFeedRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<FeedSource>)> {
    let Json(req) = body?;
    let url = parse_feed_url(&req.url)?;
    let (source, added) = blocking(&state, move |store| {
        Ok(store.subscribe(&user, FeedSource::new(url, req.title))?)
    })
    .await?;
    state.poll_now.notify_one();
    let status = if added {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(source)))
}

async fn remove_feed(
    State(state): State<AppState>,
    Path((user, feed_id)): Path<(String, String)>,
) -> ApiResult<StatusCode> {
    let removed = blocking(&state, move |store| Ok(store.unsubscribe(&user, &feed_id)?)).await?;
    if removed {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_feed",
            "not subscribed to that feed",
        ))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ImportResponse {
    pub added: usize,
    pub feeds: Vec<FeedSource>,
}

async fn import_feeds(
    State(state): State<AppState>,
    Path(user): Path<String>,
    body: Bytes,
) -> ApiResult<Json<ImportResponse>> {
    let sources = import_opml(&body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_opml", e.to_string()))?;
    let response = blocking(&state, move |store| {
        let mut added = 0;
        let mut feeds = Vec::new();
        for source in sources {
            let (stored, new) = store.subscribe(&user, source)?;
            added += usize::from(new);
            feeds.push(stored);
        }
        Ok(ImportResponse { added, feeds })
    })
    .await?;
    state.poll_now.notify_one();
    Ok(Json(response))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trends {
    pub c_d: Option<Trend>,
    pub r_precision: Option<Trend>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsResponse {
    pub user_id: String,
    pub sessions: Vec<SessionSummary>,
    /// Least-squares lines over session id; absent with fewer than two points.
    pub trend: Trends,
}

fn trend_of(sessions: &[SessionSummary], value: impl Fn(&SessionMetrics) -> Option<f64>) -> Option<Trend> {
    let points: Vec<(f64, f64)> = sessions
        .iter()
        .filter_map(|s| value(&s.metrics).map(|v| (s.session_id as f64, v)))
        .collect();
    linear_fit(&points)
        .ok()
        .map(|(slope, intercept)| Trend { slope, intercept })
}

async fn metrics(
    State(state): State<AppState>,
    Path(user): Path<String>,
) -> ApiResult<Json<MetricsResponse>> {
    let response = blocking(&state, move |store| {
        let history = store.profile_history(&user)?;
        let sessions = store
            .list_sessions(&user)?
            .iter()
            .map(|r| summarize(r, &history, &store.options().tokenizer))
            .collect::<ApiResult<Vec<_>>>()?;
        let trend = Trends {
            c_d: trend_of(&sessions, |m| m.c_d),
            r_precision: trend_of(&sessions, |m| m.r_precision),
        };
        Ok(MetricsResponse {
            user_id: user,
            sessions,
            trend,
        })
    })
    .await?;
    Ok(Json(response))
}

async fn profile(
    State(state): State<AppState>,
    Path(user): Path<String>,
) -> ApiResult<Json<ProfileSnapshot>> {
    let snapshot = blocking(&state, move |store| Ok(store.load_profile(&user)?)).await?;
    Ok(Json(snapshot))
}
