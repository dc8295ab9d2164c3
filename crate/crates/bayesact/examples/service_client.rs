//! Drive the session API in process: open a tutor session, answer two
//! questions with statements from the table and read the snapshot back.
//!
//! cargo run --example service_client

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use bayesact::service::{router, AppState, Resources};

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).expect("valid request");
    let resp = app.clone().oneshot(req).await.expect("router is infallible");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::main]
async fn main() -> Result<(), bayesact::Error> {
    let app = router(Arc::new(AppState::new(Resources::sample()?)));
    let (status, s) = call(&app, "POST", "/api/sessions", Some(json!({ "kind": "tutor", "n": 100, "seed": 1 }))).await;
    println!("create -> {status}; tutor opens with \"{}\"", s["opening"]["agent_statement"]["text"].as_str().unwrap_or(""));
    let id = s["id"].as_str().expect("session id").to_string();
    let (_, table) = call(&app, "GET", "/api/statements", None).await;
    let pick = |context: &str| {
        table.as_array().into_iter().flatten().find(|s| s["context"] == context).map(|s| s["id"].clone())
    };
    let mut question = s["question"].clone();
    for context in ["client_correct", "client_incorrect"] {
        println!("question: {}", question["prompt"]);
        let body = json!({ "answer_choice": 0, "statement_id": pick(context) });
        let (status, r) = call(&app, "POST", &format!("/api/sessions/{id}/act"), Some(body)).await;
        println!("act -> {status}; {} / tutor: \"{}\"", r["feedback"].as_str().unwrap_or(""), r["agent_statement"]["text"].as_str().unwrap_or(""));
        question = r["next_question"].clone();
    }
    let (_, snap) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    println!("after {} acts Pr(skill) = {}", snap["step"], snap["summary"]["skill"]);
    Ok(())
}
