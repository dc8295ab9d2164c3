//! HTTP JSON API over live sessions, with a server-sent event stream per session.
//!
//! Sessions live in memory. Each one is guarded by its own lock and all filter
//! work runs on the blocking pool, so requests to one session are serialised
//! while different sessions proceed in parallel.

mod session;

pub use session::{
    ActError, ActRequest, ActResponse, Kind, QuestionView, Resources, Session, SessionConfig, SessionOverrides,
    StatementView, Summary,
};

use std::collections::HashMap;
use std::convert::Infallible;
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::broadcast;

use crate::Error;

/// One pushed update: the reply to act number `id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub id: usize,
    pub response: ActResponse,
}

struct Entry {
    session: Session,
    created_ms: u128,
    updated_ms: u128,
    events: Vec<StepEvent>,
    /// Dropped on delete, which ends every open stream.
    tx: Option<broadcast::Sender<StepEvent>>,
}

type Handle = Arc<Mutex<Entry>>;

pub struct AppState {
    res: Resources,
    sessions: RwLock<HashMap<String, Handle>>,
    next_id: AtomicU64,
    journal: Option<PathBuf>,
}

impl AppState {
    pub fn new(res: Resources) -> Self {
        AppState { res, sessions: RwLock::new(HashMap::new()), next_id: AtomicU64::new(1), journal: None }
    }

    /// Append every create and act to `<dir>/<session>.jsonl`.
    pub fn with_journal(mut self, dir: PathBuf) -> Self {
        self.journal = Some(dir);
        self
    }

    fn get(&self, id: &str) -> Option<Handle> {
        self.sessions.read().expect("session map poisoned").get(id).cloned()
    }

    fn log(&self, id: &str, line: &Value) {
        if let Some(dir) = &self.journal {
            let path = dir.join(format!("{id}.jsonl"));
            let res = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .and_then(|mut f| writeln!(f, "{line}"));
            if let Err(e) = res {
                eprintln!("journal write failed for session {id}: {e}");
            }
        }
    }
}

/// Rebuild a session from its journal by replaying the recorded requests.
pub fn replay_journal(text: &str, res: &Resources) -> Result<Session, Error> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head: CreateRequest = match lines.next() {
        Some(l) => serde_json::from_value(serde_json::from_str::<Value>(l)?["create"].clone())?,
        None => return Err(Error::Usage("empty journal".into())),
    };
    let cfg = SessionConfig::resolve(head.kind, &head.overrides, res)?;
    let mut s = Session::new(head.kind, cfg, res)?;
    for l in lines {
        let req: ActRequest = serde_json::from_value(serde_json::from_str::<Value>(l)?["act"].clone())?;
        s.act(&req, res).map_err(|e| Error::Usage(format!("replay failed: {e:?}")))?;
    }
    Ok(s)
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}", get(snapshot).delete(remove))
        .route("/api/sessions/{id}/act", post(act))
        .route("/api/sessions/{id}/events", get(events))
        .route("/api/statements", get(statements))
        .with_state(state)
}

/// Serve until ctrl-c.
pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn not_found(id: &str) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, format!("no session `{id}`"))
}

fn unprocessable(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::UNPROCESSABLE_ENTITY, msg.into())
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CreateRequest {
    kind: Kind,
    #[serde(flatten)]
    overrides: SessionOverrides,
}

#[derive(Debug, Default, Deserialize)]
struct DebugQuery {
    debug: Option<String>,
}

impl DebugQuery {
    fn on(&self) -> bool {
        matches!(self.debug.as_deref(), Some("1" | "true"))
    }
}

fn describe(id: &str, e: &Entry, res: &Resources, debug: bool) -> Value {
    let s = &e.session;
    let mut v = json!({
        "id": id,
        "kind": s.kind,
        "step": s.step,
        "finished": s.finished,
        "config": s.config,
        "summary": s.summary(),
        "question": s.current_question(res),
        "opening": s.opening,
        "trace": s.trace.iter().map(|(req, resp)| json!({ "request": req, "response": resp })).collect::<Vec<_>>(),
        "created_ms": e.created_ms,
        "updated_ms": e.updated_ms,
    });
    if debug {
        v["particles"] = s.particles_json();
    }
    v
}

async fn create(
    State(st): State<Arc<AppState>>,
    body: Result<Json<Value>, JsonRejection>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let Json(mut raw) = body.map_err(|e| unprocessable(e.body_text()))?;
    let kind = match raw.get("kind").and_then(Value::as_str) {
        Some("tutor") => Kind::Tutor,
        Some("coach") => Kind::Coach,
        Some(k) => return Err(ApiError(StatusCode::NOT_FOUND, format!("unknown session kind `{k}`"))),
        None => return Err(unprocessable("missing `kind`")),
    };
    // Flattening would swallow unknown fields, so the overrides are read on their own.
    if let Some(obj) = raw.as_object_mut() {
        obj.remove("kind");
    }
    let overrides: SessionOverrides = serde_json::from_value(raw).map_err(|e| unprocessable(e.to_string()))?;
    let req = CreateRequest { kind, overrides };
    let st2 = st.clone();
    let req2 = req.clone();
    let session = tokio::task::spawn_blocking(move || {
        let cfg = SessionConfig::resolve(req2.kind, &req2.overrides, &st2.res)?;
        Session::new(req2.kind, cfg, &st2.res)
    })
    .await
    .map_err(internal)?
    .map_err(|e| match e {
        Error::Usage(m) => unprocessable(m),
        e => internal(e),
    })?;
    let id = format!("s{}", st.next_id.fetch_add(1, Ordering::Relaxed));
    let t = now_ms();
    let (tx, _) = broadcast::channel(256);
    let entry = Entry { session, created_ms: t, updated_ms: t, events: Vec::new(), tx: Some(tx) };
    let body = describe(&id, &entry, &st.res, false);
    st.log(&id, &json!({ "create": req }));
    st.sessions.write().expect("session map poisoned").insert(id, Arc::new(Mutex::new(entry)));
    Ok((StatusCode::CREATED, Json(body)))
}

/// The full statement table, for building answer buttons.
async fn statements(State(st): State<Arc<AppState>>) -> Json<Vec<StatementView>> {
    Json(st.res.statements.entries.iter().map(session::statement_view).collect())
}

async fn snapshot(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<DebugQuery>,
) -> Result<Json<Value>, ApiError> {
    let h = st.get(&id).ok_or_else(|| not_found(&id))?;
    let e = h.lock().map_err(internal)?;
    Ok(Json(describe(&id, &e, &st.res, q.on())))
}

async fn remove(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    let h = st.sessions.write().expect("session map poisoned").remove(&id).ok_or_else(|| not_found(&id))?;
    h.lock().map_err(internal)?.tx = None;
    Ok(StatusCode::NO_CONTENT)
}

async fn act(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<DebugQuery>,
    body: Result<Json<ActRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let h = st.get(&id).ok_or_else(|| not_found(&id))?;
    let Json(req) = body.map_err(|e| unprocessable(e.body_text()))?;
    let st2 = st.clone();
    let id2 = id.clone();
    let debug = q.on();
    tokio::task::spawn_blocking(move || {
        let mut e = h.lock().map_err(internal)?;
        let out = e.session.act(&req, &st2.res).map_err(|err| match err {
            ActError::Conflict(m) => ApiError(StatusCode::CONFLICT, m),
            ActError::Invalid(m) => unprocessable(m),
            ActError::Engine(err) => internal(err),
        })?;
        e.updated_ms = now_ms();
        st2.log(&id2, &json!({ "act": req }));
        let ev = StepEvent { id: e.events.len() + 1, response: out.clone() };
        e.events.push(ev.clone());
        if let Some(tx) = &e.tx {
            // No subscribers is fine.
            let _ = tx.send(ev);
        }
        let mut v = serde_json::to_value(&out).map_err(internal)?;
        if debug {
            v["particles"] = e.session.particles_json();
        }
        Ok(Json(v))
    })
    .await
    .map_err(internal)?
}

fn sse_event(ev: &StepEvent) -> Result<Event, Infallible> {
    Ok(Event::default()
        .id(ev.id.to_string())
        .event("step")
        .json_data(ev)
        .unwrap_or_else(|_| Event::default().comment("unserialisable event")))
}

/// New events only, or everything after `Last-Event-ID` when reconnecting.
async fn events(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let h = st.get(&id).ok_or_else(|| not_found(&id))?;
    let last: Option<usize> = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .map(|s| s.trim().parse().map_err(|_| unprocessable("Last-Event-ID must be an integer")))
        .transpose()?;
    let (backlog, rx) = {
        let e = h.lock().map_err(internal)?;
        let backlog: Vec<StepEvent> = match last {
            Some(n) => e.events.iter().filter(|ev| ev.id > n).cloned().collect(),
            None => Vec::new(),
        };
        (backlog, e.tx.as_ref().map(|tx| tx.subscribe()))
    };
    let floor = backlog.last().map(|ev| ev.id).or(last).unwrap_or(0);
    let live = stream::unfold(rx, move |rx| async move {
        let mut rx = rx?;
        loop {
            match rx.recv().await {
                Ok(ev) if ev.id <= floor => continue,
                Ok(ev) => return Some((ev, Some(rx))),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    let all = stream::iter(backlog).chain(live).map(|ev| sse_event(&ev));
    Ok(Sse::new(all).keep_alive(KeepAlive::default()))
}
