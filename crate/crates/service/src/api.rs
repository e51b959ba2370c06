use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use conjr_core::annotation::Consolidation;
use conjr_core::{
    consolidate as consolidate_one, iaa, parse_conllu, rank_annotators, validate as check,
    ConjunctionRef, DatasetStats, DepGraph, IaaReport, RewriteSet, ValidationReport,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::store::{Event, StoreError};
use crate::AppState;

#[derive(Debug)]
pub(crate) enum ApiError {
    BadRequest(String),
    NotFound(String),
    Conflict(serde_json::Value),
    Invalid(ValidationReport),
    Internal(String),
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::BadRequest(m) => {
                (StatusCode::BAD_REQUEST, Json(json!({ "error": m }))).into_response()
            }
            ApiError::NotFound(m) => {
                (StatusCode::NOT_FOUND, Json(json!({ "error": m }))).into_response()
            }
            ApiError::Conflict(body) => (StatusCode::CONFLICT, Json(body)).into_response(),
            ApiError::Invalid(report) => {
                (StatusCode::UNPROCESSABLE_ENTITY, Json(report)).into_response()
            }
            ApiError::Internal(detail) => {
                // the detail stays in the server log; clients get the id
                let id = uuid::Uuid::new_v4();
                eprintln!("internal error {id}: {detail}");
                (
                    StatusCode::INTERNAL_SERVER_ERROR,
                    Json(json!({ "error": "internal error", "id": id.to_string() })),
                )
                    .into_response()
            }
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Deserialize)]
pub(crate) struct NextQuery {
    annotator: Option<String>,
}

#[derive(Debug, Serialize)]
struct BatchItem<'a> {
    instance_id: &'a str,
    text: &'a str,
    conjunction: ConjunctionRef,
}

#[derive(Debug, Serialize)]
struct BatchView<'a> {
    id: &'a str,
    annotator: &'a str,
    items: Vec<BatchItem<'a>>,
}

fn batch_view<'a>(state: &'a AppState, index: usize, annotator: &'a str) -> BatchView<'a> {
    let (id, ids) = &state.inner.batches[index];
    let items = ids
        .iter()
        .map(|i| {
            let inst = &state.inner.instances[i];
            BatchItem {
                instance_id: &inst.id,
                text: &inst.text,
                conjunction: inst.conjunction,
            }
        })
        .collect();
    BatchView {
        id,
        annotator,
        items,
    }
}

fn annotator_id(raw: Option<String>) -> ApiResult<String> {
    match raw {
        Some(a) if !a.trim().is_empty() => Ok(a),
        _ => Err(ApiError::BadRequest("annotator id required".into())),
    }
}

pub(crate) async fn next_batch(
    State(state): State<AppState>,
    Query(q): Query<NextQuery>,
) -> ApiResult<Response> {
    let annotator = annotator_id(q.annotator)?;
    let batches = &state.inner.batches;
    let picked = state.store().transact(|s| {
        match batches
            .iter()
            .position(|(id, _)| !s.assignments.contains_key(id))
        {
            Some(i) => (
                vec![Event::Assign {
                    batch: batches[i].0.clone(),
                    annotator: annotator.clone(),
                }],
                Some(i),
            ),
            None => (vec![], None),
        }
    })?;
    Ok(match picked {
        Some(i) => Json(batch_view(&state, i, &annotator)).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

#[derive(Debug, Deserialize)]
pub(crate) struct AssignBody {
    annotator: Option<String>,
}

pub(crate) async fn assign_batch(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<AssignBody>, JsonRejection>,
) -> ApiResult<Response> {
    let annotator = annotator_id(body?.0.annotator)?;
    let index = state
        .inner
        .batches
        .iter()
        .position(|(b, _)| *b == id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown batch {id}")))?;
    let holder = state.store().transact(|s| match s.assignments.get(&id) {
        Some(holder) => (vec![], Some(holder.clone())),
        None => (
            vec![Event::Assign {
                batch: id.clone(),
                annotator: annotator.clone(),
            }],
            None,
        ),
    })?;
    if let Some(holder) = holder {
        return Err(ApiError::Conflict(json!({
            "error": format!("batch {id} already assigned"),
            "annotator": holder,
        })));
    }
    Ok(Json(batch_view(&state, index, &annotator)).into_response())
}

/// A submission, optionally with one CoNLL-U parse per rewrite.
#[derive(Debug, Deserialize)]
pub(crate) struct SubmissionBody {
    #[serde(flatten)]
    submission: RewriteSet,
    #[serde(default)]
    conllu: Option<Vec<String>>,
}

fn run_validation(state: &AppState, body: &SubmissionBody) -> ApiResult<ValidationReport> {
    let id = &body.submission.instance_id;
    let inst = state
        .inner
        .instances
        .get(id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown instance {id}")))?;
    let input = inst
        .input_graph()
        .map_err(|e| ApiError::Internal(format!("instance {id}: {e}")))?;
    let parses: Option<Vec<DepGraph>> = match &body.conllu {
        None => None,
        Some(docs) => {
            if docs.len() != body.submission.sentences.len() {
                return Err(ApiError::BadRequest(format!(
                    "{} sentences but {} parses",
                    body.submission.sentences.len(),
                    docs.len()
                )));
            }
            let mut gs = Vec::with_capacity(docs.len());
            for doc in docs {
                let mut parsed =
                    parse_conllu(doc).map_err(|e| ApiError::BadRequest(e.to_string()))?;
                if parsed.len() != 1 {
                    return Err(ApiError::BadRequest(
                        "each parse must hold exactly one sentence".into(),
                    ));
                }
                gs.push(parsed.remove(0));
            }
            Some(gs)
        }
    };
    Ok(check(
        &input,
        inst.conjunction.form,
        &body.submission,
        parses.as_deref(),
    ))
}

pub(crate) async fn validate(
    State(state): State<AppState>,
    body: Result<Json<SubmissionBody>, JsonRejection>,
) -> ApiResult<Json<ValidationReport>> {
    Ok(Json(run_validation(&state, &body?.0)?))
}

pub(crate) async fn submit(
    State(state): State<AppState>,
    body: Result<Json<SubmissionBody>, JsonRejection>,
) -> ApiResult<Response> {
    let body = body?.0;
    annotator_id(Some(body.submission.annotator.clone()))?;
    let report = run_validation(&state, &body)?;
    if !report.passed() {
        return Err(ApiError::Invalid(report));
    }
    let submission = body.submission;
    let version = state.store().transact(|s| {
        let version = 1 + s
            .submissions
            .get(&submission.instance_id)
            .into_iter()
            .flatten()
            .filter(|x| x.annotator == submission.annotator)
            .count();
        (
            vec![Event::Submission {
                submission: submission.clone(),
            }],
            version,
        )
    })?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "report": report, "version": version })),
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
pub(crate) struct ConsolidateQuery {
    min: Option<usize>,
}

pub(crate) async fn consolidate(
    State(state): State<AppState>,
    Path(instance): Path<String>,
    Query(q): Query<ConsolidateQuery>,
) -> ApiResult<Json<Consolidation>> {
    if !state.inner.instances.contains_key(&instance) {
        return Err(ApiError::NotFound(format!("unknown instance {instance}")));
    }
    let need = q.min.unwrap_or(state.inner.config.min_submissions).max(1);
    let outcome = state.store().transact(|s| {
        let subs = s.latest_submissions(&instance);
        if subs.len() < need {
            return (vec![], Err((subs.len(), need)));
        }
        let history: Vec<(&[RewriteSet], &RewriteSet)> = s
            .consolidations
            .values()
            .map(|(used, c)| (used.as_slice(), &c.gold))
            .collect();
        let ranking = rank_annotators(history);
        match consolidate_one(&subs, &ranking) {
            Ok(result) => (
                vec![Event::Consolidation {
                    submissions: subs,
                    result: result.clone(),
                }],
                Ok(Ok(result)),
            ),
            Err(e) => (vec![], Ok(Err(e))),
        }
    })?;
    match outcome {
        Ok(Ok(result)) => Ok(Json(result)),
        Ok(Err(e)) => Err(ApiError::Internal(e.to_string())),
        Err((have, need)) => Err(ApiError::Conflict(json!({
            "error": format!("instance {instance} has {have} submission(s), {need} required"),
            "have": have,
            "need": need,
        }))),
    }
}

#[derive(Debug, Serialize)]
struct BatchCounts {
    total: usize,
    assigned: usize,
}

#[derive(Debug, Serialize)]
struct StatsView<'a> {
    dataset: &'a DatasetStats,
    iaa: IaaReport,
    submissions: usize,
    consolidated: usize,
    batches: BatchCounts,
}

pub(crate) async fn stats(State(state): State<AppState>) -> Json<serde_json::Value> {
    let snap = state.store().snapshot();
    let groups: Vec<&[RewriteSet]> = snap
        .consolidations
        .values()
        .map(|(used, _)| used.as_slice())
        .collect();
    let view = StatsView {
        dataset: &state.inner.dataset_stats,
        iaa: iaa(&groups),
        submissions: snap.submissions.values().map(Vec::len).sum(),
        consolidated: snap.consolidations.len(),
        batches: BatchCounts {
            total: state.inner.batches.len(),
            assigned: snap.assignments.len(),
        },
    };
    Json(serde_json::to_value(view).expect("stats serialize"))
}

pub(crate) async fn instance(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    match state.inner.instances.get(&id) {
        Some(inst) => Ok(Json(inst).into_response()),
        None => Err(ApiError::NotFound(format!("unknown instance {id}"))),
    }
}
