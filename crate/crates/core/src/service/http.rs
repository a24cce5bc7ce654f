use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use chrono::NaiveDate;
use serde::Deserialize;
use serde_json::Value;

use super::{App, ErrorBody, SubmissionArgs};
use crate::canonical;
use crate::error::{Error, Result};
use crate::grading::{BlueprintRow, Decision};
use crate::ingestion::DraftSpecification;

pub const ACTOR_HEADER: &str = "x-actor";

type Shared = Arc<App>;

fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::Validation { .. } | Error::Json(_) | Error::Csv(_) => StatusCode::BAD_REQUEST,
        Error::Forbidden(_) => StatusCode::FORBIDDEN,
        Error::NotFound(_) => StatusCode::NOT_FOUND,
        Error::Conflict(_) => StatusCode::CONFLICT,
        Error::Integrity(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::Adapter { .. } => StatusCode::BAD_GATEWAY,
        Error::Config(_) | Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn json_bytes(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

/// Canonical JSON on success, `{code, message, field?}` on failure.
fn respond(result: Result<Value>) -> Response {
    match result.and_then(|v| canonical::to_vec(&v)) {
        Ok(body) => json_bytes(StatusCode::OK, body),
        Err(e) => {
            let body = canonical::to_vec(&ErrorBody::from(&e)).unwrap_or_default();
            json_bytes(status_of(&e), body)
        }
    }
}

fn actor(headers: &HeaderMap) -> Option<&str> {
    headers.get(ACTOR_HEADER).and_then(|v| v.to_str().ok())
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| Error::validation("body", e.to_string()))
}

fn required<'a>(q: &'a HashMap<String, String>, name: &str) -> Result<&'a str> {
    q.get(name)
        .map(String::as_str)
        .ok_or_else(|| Error::validation(name, format!("query parameter `{name}` is required")))
}

async fn health(State(app): State<Shared>) -> Response {
    respond(Ok(app.health()))
}

async fn list_entities(State(app): State<Shared>, Path(kind): Path<String>) -> Response {
    respond(app.entities(&kind))
}

async fn put_entity(
    State(app): State<Shared>,
    Path(kind): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    respond(parse_body(&body).and_then(|v| app.put_entity(actor(&headers), &kind, v)))
}

async fn import(
    State(app): State<Shared>,
    Path(kind): Path<String>,
    headers: HeaderMap,
    body: String,
) -> Response {
    respond(app.import(actor(&headers), &kind, &body))
}

#[derive(Deserialize)]
struct ExtractBody {
    text: String,
}

async fn ingest_extract(State(app): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    respond(parse_body::<ExtractBody>(&body).and_then(|b| app.ingest_extract(actor(&headers), &b.text)))
}

#[derive(Deserialize)]
struct ConfirmBody {
    draft_id: String,
    #[serde(default)]
    draft: Option<DraftSpecification>,
}

async fn ingest_confirm(State(app): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    respond(
        parse_body::<ConfirmBody>(&body)
            .and_then(|b| app.ingest_confirm(actor(&headers), &b.draft_id, b.draft)),
    )
}

#[derive(Deserialize)]
struct ExamBody {
    exam_id: String,
    offering: String,
    blueprint: Vec<BlueprintRow>,
}

async fn create_exam(State(app): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    respond(parse_body::<ExamBody>(&body).and_then(|b| {
        app.create_exam(actor(&headers), &b.exam_id, &b.offering, &b.blueprint)
    }))
}

#[derive(Deserialize)]
struct SubmitBody {
    #[serde(flatten)]
    sub: SubmissionArgs,
    answer: String,
}

async fn submit(State(app): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    respond(parse_body::<SubmitBody>(&body).and_then(|b| app.submit(actor(&headers), &b.sub, &b.answer)))
}

async fn suggest(State(app): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    respond(parse_body::<SubmissionArgs>(&body).and_then(|b| app.suggest(actor(&headers), &b)))
}

#[derive(Deserialize)]
struct DecideBody {
    #[serde(flatten)]
    sub: SubmissionArgs,
    decision: Decision,
}

async fn decide(State(app): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    // Role first: an anonymous request is refused before its body is read.
    if let Err(e) = app.require(actor(&headers), crate::config::Role::Instructor) {
        return respond(Err(e));
    }
    respond(parse_body::<DecideBody>(&body).and_then(|b| app.decide(actor(&headers), &b.sub, &b.decision)))
}

async fn grades_audit(State(app): State<Shared>, Query(q): Query<HashMap<String, String>>) -> Response {
    respond(required(&q, "exam").and_then(|e| app.grades_audit(e)))
}

async fn outcomes_clo(State(app): State<Shared>, Query(q): Query<HashMap<String, String>>) -> Response {
    respond(required(&q, "offering").and_then(|o| app.outcomes_clo(o, required(&q, "clo")?)))
}

async fn outcomes_plo(State(app): State<Shared>, Query(q): Query<HashMap<String, String>>) -> Response {
    respond(required(&q, "program").and_then(|p| app.outcomes_plo(p, required(&q, "term")?)))
}

async fn outcomes_matrix(State(app): State<Shared>, Query(q): Query<HashMap<String, String>>) -> Response {
    respond(required(&q, "program").and_then(|p| app.outcomes_matrix(p, required(&q, "term")?)))
}

async fn outcomes_comply(State(app): State<Shared>, Query(q): Query<HashMap<String, String>>) -> Response {
    respond(required(&q, "course").and_then(|c| app.outcomes_comply(c)))
}

#[derive(Deserialize)]
struct RunBody {
    workflow_id: String,
    #[serde(default)]
    date: Option<NaiveDate>,
    #[serde(default)]
    student: Option<String>,
}

async fn wf_run(State(app): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    respond(parse_body::<RunBody>(&body).and_then(|b| {
        app.wf_run(actor(&headers), &b.workflow_id, b.date, b.student.as_deref())
    }))
}

#[derive(Deserialize)]
struct ApproveBody {
    pending_id: String,
}

async fn wf_approve(State(app): State<Shared>, headers: HeaderMap, body: Bytes) -> Response {
    respond(parse_body::<ApproveBody>(&body).and_then(|b| app.wf_approve(actor(&headers), &b.pending_id)))
}

async fn wf_pending(State(app): State<Shared>) -> Response {
    respond(app.wf_pending())
}

async fn reports(State(app): State<Shared>, Query(q): Query<HashMap<String, String>>) -> Response {
    let get = |k: &str| q.get(k).map(String::as_str);
    respond(App::report_filter(get("type"), get("from"), get("to")).and_then(|f| app.reports(&f)))
}

async fn report(State(app): State<Shared>, Path(id): Path<String>) -> Response {
    respond(app.report(&id))
}

async fn report_markdown(State(app): State<Shared>, Path(id): Path<String>) -> Response {
    match app.archive.get(&id) {
        Some(r) => (
            StatusCode::OK,
            [(header::CONTENT_TYPE, "text/markdown; charset=utf-8")],
            crate::reports::render_markdown(&r),
        )
            .into_response(),
        None => respond(Err(Error::NotFound(format!("report {id}")))),
    }
}

async fn not_found() -> Response {
    respond(Err(Error::NotFound("no such endpoint".into())))
}

pub fn router(app: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/entities/{kind}", get(list_entities).post(put_entity))
        .route("/import/{kind}", post(import))
        .route("/ingest/extract", post(ingest_extract))
        .route("/ingest/confirm", post(ingest_confirm))
        .route("/exams", post(create_exam))
        .route("/grades/submit", post(submit))
        .route("/grades/suggest", post(suggest))
        .route("/grades/decide", post(decide))
        .route("/grades/audit", get(grades_audit))
        .route("/outcomes/clo", get(outcomes_clo))
        .route("/outcomes/plo", get(outcomes_plo))
        .route("/outcomes/matrix", get(outcomes_matrix))
        .route("/outcomes/comply", get(outcomes_comply))
        .route("/wf/run", post(wf_run))
        .route("/wf/approve", post(wf_approve))
        .route("/wf/pending", get(wf_pending))
        .route("/reports", get(reports))
        .route("/reports/{id}", get(report))
        .route("/reports/{id}/markdown", get(report_markdown))
        .fallback(not_found)
        .with_state(app)
}

/// Bind and serve until the process ends. A busy port or bad address is a
/// startup error.
pub async fn serve(app: App) -> Result<()> {
    let addr = app.config.listen.clone();
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| Error::Config(format!("listen {addr}: {e}")))?;
    axum::serve(listener, router(Arc::new(app))).await?;
    Ok(())
}
