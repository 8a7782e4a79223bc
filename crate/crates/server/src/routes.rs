use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use datascope::coding::{import_coding_csv, CodingSession, Event, EventKind, ImportOptions, NewCode, Strategy};
use datascope::hypothesis::{
    register_hypothesis, render_report, Evidence, Hypothesis, StoredHypothesis, UsageAudit, Verdict,
};
use datascope::layout::{EmbeddingLayout, LayoutSidecar, Provenance, Subsample, TopicModelSpec};
use datascope::neighborhood::{neighbor_report, NeighborReport, PointSet, ReportOptions, Space};
use datascope::pipeline::{embed_corpus_observed, embed_images_observed, Stage, TextPipeline};
use datascope::stats::{LineRule, StatsReport};
use datascope::tsne::TsneConfig;
use serde::{Deserialize, Serialize};

use crate::catalog::{resolve_split, MNIST, NEWSGROUPS};
use crate::error::extract::{Json as JsonBody, Path, Query};
use crate::error::ApiError;
use crate::layouts::valid_layout_id;
use crate::AppState;

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

pub fn api(state: Shared) -> Router {
    Router::new()
        .route("/api/datasets", get(list_datasets))
        .route("/api/datasets/{id}/stats", get(dataset_stats))
        .route("/api/datasets/{id}/documents/{doc}", get(document))
        .route("/api/datasets/{id}/images/{idx}", get(image_png))
        .route("/api/layouts", get(list_layouts).post(create_layout))
        .route("/api/layouts/{id}", get(layout_info))
        .route("/api/layouts/{id}/points", get(layout_points))
        .route("/api/layouts/{id}/svg", get(layout_svg))
        .route("/api/neighbors", get(neighbors))
        .route("/api/sessions", get(list_sessions).post(create_session))
        .route("/api/sessions/import", post(import_session))
        .route("/api/sessions/{id}", get(session_view))
        .route("/api/sessions/{id}/events", get(session_events).post(post_event))
        .route("/api/sessions/{id}/queue", get(session_queue))
        .route("/api/sessions/{id}/next", post(session_next))
        .route("/api/sessions/{id}/export", get(session_export))
        .route("/api/hypotheses", get(list_hypotheses).post(create_hypothesis))
        .route("/api/hypotheses/{id}", get(hypothesis_view))
        .route("/api/hypotheses/{id}/evidence", post(add_evidence))
        .route("/api/hypotheses/{id}/audit", axum::routing::put(set_audit))
        .route("/api/hypotheses/{id}/verdict", post(set_verdict))
        .route("/api/reports/{id}", get(report))
        .route("/api/jobs/{id}", get(job_status))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

/// Runs file and CPU work off the async workers.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn parse_list<T: std::str::FromStr>(s: Option<&str>, what: &str) -> ApiResult<Vec<T>> {
    s.map(|s| {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse().map_err(|_| ApiError::bad_request(format!("bad {what} {p:?}"))))
            .collect()
    })
    .unwrap_or_else(|| Ok(Vec::new()))
}

// ---- datasets

async fn list_datasets(State(st): State<Shared>) -> impl IntoResponse {
    Json(st.catalog.list())
}

#[derive(Deserialize)]
struct StatsQuery {
    version: Option<String>,
    line_rule: Option<String>,
    thresholds: Option<String>,
}

#[derive(Serialize)]
struct ImageStats {
    split: &'static str,
    images: usize,
    label_counts: [usize; 10],
}

async fn dataset_stats(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<StatsQuery>) -> ApiResult<Response> {
    blocking(move || match id.as_str() {
        NEWSGROUPS => {
            let v = st.catalog.resolve_version(q.version.as_deref())?;
            let rule: LineRule = q
                .line_rule
                .as_deref()
                .map(str::parse)
                .transpose()
                .map_err(ApiError::bad_request)?
                .unwrap_or_default();
            let mut thresholds: Vec<u64> = parse_list(q.thresholds.as_deref(), "threshold")?;
            if thresholds.is_empty() {
                thresholds = vec![2, 3, 10];
            }
            let corpus = st.catalog.corpus(v)?;
            Ok(Json(StatsReport::compute(&corpus, rule, &thresholds)).into_response())
        }
        MNIST => {
            let s = resolve_split(q.version.as_deref())?;
            let set = st.catalog.images(s)?;
            Ok(Json(ImageStats {
                split: s.as_str(),
                images: set.len(),
                label_counts: set.label_counts(),
            })
            .into_response())
        }
        other => Err(ApiError::not_found(format!("unknown dataset {other:?}"))),
    })
    .await
}

#[derive(Deserialize)]
struct VersionQuery {
    version: Option<String>,
    split: Option<String>,
    scale: Option<u32>,
}

async fn document(
    State(st): State<Shared>,
    Path((id, doc)): Path<(String, u64)>,
    Query(q): Query<VersionQuery>,
) -> ApiResult<Response> {
    if id != NEWSGROUPS {
        return Err(ApiError::not_found(format!("dataset {id:?} has no text documents")));
    }
    blocking(move || {
        let v = st.catalog.resolve_version(q.version.as_deref())?;
        let corpus = st.catalog.corpus(v)?;
        let d = corpus
            .find(doc)
            .ok_or_else(|| ApiError::not_found(format!("document {doc} not in version {v}")))?;
        Ok(Json(d).into_response())
    })
    .await
}

fn encode_png(pixels: &[u8], side: u32, scale: u32) -> ApiResult<Vec<u8>> {
    let out_side = side * scale;
    let mut data = Vec::with_capacity((out_side * out_side) as usize);
    for r in 0..out_side {
        for c in 0..out_side {
            data.push(pixels[((r / scale) * side + c / scale) as usize]);
        }
    }
    let mut buf = Vec::new();
    let mut enc = png::Encoder::new(&mut buf, out_side, out_side);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header().map_err(|e| ApiError::internal(e.to_string()))?;
    w.write_image_data(&data).map_err(|e| ApiError::internal(e.to_string()))?;
    w.finish().map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(buf)
}

async fn image_png(
    State(st): State<Shared>,
    Path((id, idx)): Path<(String, usize)>,
    Query(q): Query<VersionQuery>,
) -> ApiResult<Response> {
    if id != MNIST {
        return Err(ApiError::not_found(format!("dataset {id:?} has no images")));
    }
    let scale = q.scale.unwrap_or(1);
    if !(1..=16).contains(&scale) {
        return Err(ApiError::bad_request("scale must be in 1..=16"));
    }
    blocking(move || {
        let s = resolve_split(q.split.as_deref().or(q.version.as_deref()))?;
        let set = st.catalog.images(s)?;
        let sample = set
            .samples
            .get(idx)
            .ok_or_else(|| ApiError::not_found(format!("image {idx} not in {} ({} images)", s.as_str(), set.len())))?;
        let png = encode_png(&sample.pixels, 28, scale)?;
        Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
    })
    .await
}

// ---- layouts

#[derive(Serialize)]
struct LayoutEntry {
    id: String,
    #[serde(flatten)]
    sidecar: LayoutSidecar,
}

async fn list_layouts(State(st): State<Shared>) -> ApiResult<Json<Vec<LayoutEntry>>> {
    blocking(move || {
        let ids = st.layouts.list().map_err(|e| ApiError::internal(e.to_string()))?;
        let mut out = Vec::new();
        for id in ids {
            // a sidecar being replaced concurrently is skipped rather than failing the list
            if let Ok(sidecar) = st.layouts.sidecar(&id) {
                out.push(LayoutEntry { id, sidecar });
            }
        }
        Ok(Json(out))
    })
    .await
}

async fn layout_info(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<LayoutEntry>> {
    blocking(move || {
        let sidecar = st.layouts.sidecar(&id)?;
        Ok(Json(LayoutEntry { id, sidecar }))
    })
    .await
}

/// Body of `POST /api/layouts`. Text layouts take either a full `pipeline` or a
/// preset from `model`/`components`/`seed`; `tsne` and `subsample` override either.
#[derive(Debug, Deserialize)]
pub struct NewLayout {
    pub id: String,
    pub dataset: String,
    pub version: Option<String>,
    pub model: Option<String>,
    pub components: Option<usize>,
    pub lda_iterations: Option<usize>,
    pub seed: Option<u64>,
    pub pipeline: Option<TextPipeline>,
    pub tsne: Option<TsneConfig>,
    pub subsample: Option<Subsample>,
}

enum Plan {
    Text(datascope::newsgroups::CorpusVersion, TextPipeline),
    Images(datascope::mnist::Split, TsneConfig, Option<Subsample>),
}

fn plan_layout(st: &AppState, req: &NewLayout) -> ApiResult<Plan> {
    let seed = req.seed.unwrap_or(0);
    match req.dataset.as_str() {
        NEWSGROUPS => {
            let v = st.catalog.resolve_version(req.version.as_deref())?;
            let mut p = match (&req.pipeline, req.model.as_deref().unwrap_or("lsi")) {
                (Some(p), _) => p.clone(),
                (None, "lsi") => TextPipeline::lsi(req.components.unwrap_or(100), seed),
                (None, "lda") => TextPipeline::lda(req.components.unwrap_or(20), req.lda_iterations.unwrap_or(500), seed),
                (None, other) => return Err(ApiError::bad_request(format!("unknown model {other:?} (lsi | lda)"))),
            };
            if matches!(p.model, TopicModelSpec::Raw) {
                return Err(ApiError::bad_request("text layouts need an lsi or lda model"));
            }
            if let Some(t) = &req.tsne {
                p.tsne = t.clone();
            }
            if req.subsample.is_some() {
                p.subsample = req.subsample.clone();
            }
            p.tsne.exec = st.exec;
            Ok(Plan::Text(v, p))
        }
        MNIST => {
            if req.model.as_deref().is_some_and(|m| m != "raw") || req.pipeline.is_some() {
                return Err(ApiError::bad_request("image layouts use raw pixels"));
            }
            let split = resolve_split(req.version.as_deref())?;
            let mut tsne = req.tsne.clone().unwrap_or_else(|| TsneConfig {
                seed,
                ..TsneConfig::barnes_hut()
            });
            tsne.exec = st.exec;
            Ok(Plan::Images(split, tsne, req.subsample.clone()))
        }
        other => Err(ApiError::not_found(format!("unknown dataset {other:?}"))),
    }
}

fn run_plan(st: &AppState, job: &str, id: &str, plan: Plan) -> Result<(), String> {
    let progress = |s: Stage| {
        let name = serde_json::to_value(s).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        st.jobs.progress(job, &name, s.fraction());
    };
    st.jobs.progress(job, "load", 0.0);
    let out = match plan {
        Plan::Text(v, p) => {
            let corpus = st.catalog.corpus(v).map_err(|e| e.to_string())?;
            embed_corpus_observed(&corpus, &p, st.exec, progress).map_err(|e| e.to_string())?
        }
        Plan::Images(s, tsne, sub) => {
            let set = st.catalog.images(s).map_err(|e| e.to_string())?;
            embed_images_observed(&set, &tsne, sub.as_ref(), st.exec, progress).map_err(|e| e.to_string())?
        }
    };
    st.layouts.save(id, &out).map_err(|e| format!("{e:?}"))
}

async fn create_layout(State(st): State<Shared>, JsonBody(req): JsonBody<NewLayout>) -> ApiResult<Response> {
    if !valid_layout_id(&req.id) {
        return Err(ApiError::bad_request(format!("invalid layout id {:?}", req.id)));
    }
    if st.layouts.exists(&req.id) || st.jobs.busy(&req.id) {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "already_exists",
            format!("layout {:?} exists or is being computed", req.id),
        ));
    }
    let plan = plan_layout(&st, &req)?;
    let job = st.jobs.create(&req.id);
    let job_id = job.id.clone();
    let worker = st.clone();
    tokio::task::spawn_blocking(move || {
        let res = run_plan(&worker, &job_id, &req.id, plan);
        if let Err(e) = &res {
            tracing::warn!(job = %job_id, error = %e, "layout job failed");
        }
        worker.jobs.finish(&job_id, res);
    });
    Ok((StatusCode::ACCEPTED, Json(job)).into_response())
}

async fn job_status(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<crate::JobStatus>> {
    st.jobs
        .get(&id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("job {id:?} not found")))
}

#[derive(Deserialize)]
struct PointsQuery {
    label: Option<String>,
    session: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct PointRecord {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coded_as: Option<String>,
}

async fn layout_points(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<PointsQuery>,
) -> ApiResult<Json<Vec<PointRecord>>> {
    blocking(move || {
        let layout = st.layouts.load(&id)?;
        let session = q.session.as_deref().map(|s| st.sessions.load(s)).transpose()?;
        let points = (0..layout.len())
            .filter(|&i| q.label.as_deref().is_none_or(|l| layout.labels[i] == l))
            .map(|i| PointRecord {
                id: layout.ids[i],
                x: layout.points[[i, 0]],
                y: layout.points[[i, 1]],
                label: layout.labels[i].clone(),
                coded_as: session.as_ref().and_then(|s| s.code_of(layout.ids[i])).map(str::to_string),
            })
            .collect();
        Ok(Json(points))
    })
    .await
}

#[derive(Deserialize)]
struct SvgQuery {
    highlight: Option<String>,
}

async fn layout_svg(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<SvgQuery>) -> ApiResult<Response> {
    blocking(move || {
        let highlights: Vec<u64> = parse_list(q.highlight.as_deref(), "highlight id")?;
        let svg = if highlights.is_empty() {
            st.layouts.svg(&id)?
        } else {
            st.layouts.load(&id)?.to_svg(&highlights)
        };
        Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
    })
    .await
}

// ---- neighbors

#[derive(Deserialize)]
struct NeighborQuery {
    layout: String,
    anchor: u64,
    space: Option<String>,
    label: Option<String>,
    comparison: Option<u64>,
    #[serde(default)]
    distances: bool,
}

fn neighbor_for(st: &AppState, layout_id: &str, space: Space, anchor: u64, opts: &ReportOptions) -> ApiResult<(NeighborReport, EmbeddingLayout)> {
    let layout = st.layouts.load(layout_id)?;
    let report = match space {
        Space::LayoutSpace => {
            let set = PointSet::new(layout.points.view(), &layout.ids, &layout.labels)?;
            neighbor_report(&set, space, anchor, opts)?
        }
        Space::TopicSpace => {
            let (ids, features) = st.layouts.features(layout_id)?;
            if ids != layout.ids {
                return Err(ApiError::internal(format!("features of layout {layout_id} do not match its points")));
            }
            let set = PointSet::new(features.view(), &layout.ids, &layout.labels)?;
            neighbor_report(&set, space, anchor, opts)?
        }
    };
    Ok((report, layout))
}

async fn neighbors(State(st): State<Shared>, Query(q): Query<NeighborQuery>) -> ApiResult<Json<NeighborReport>> {
    let space: Space = q.space.as_deref().unwrap_or("topic-space").parse().map_err(ApiError::bad_request)?;
    blocking(move || {
        let opts = ReportOptions {
            label: q.label,
            comparison: q.comparison,
            include_distances: q.distances,
        };
        Ok(Json(neighbor_for(&st, &q.layout, space, q.anchor, &opts)?.0))
    })
    .await
}

// ---- sessions

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub dataset: String,
    pub label: String,
    pub strategy: Strategy,
    pub read_only: bool,
    pub last_ordinal: u64,
    pub sampled: Vec<u64>,
    pub queue_remaining: usize,
    pub codebook: datascope::coding::Codebook,
    pub assignments: Vec<datascope::coding::Assignment>,
    pub summary: datascope::coding::CodeSummary,
    pub saturation: datascope::coding::SaturationState,
}

fn session_view_of(s: &CodingSession, window: usize) -> ApiResult<SessionView> {
    Ok(SessionView {
        id: s.id.clone(),
        dataset: s.dataset.clone(),
        label: s.label.clone(),
        strategy: s.strategy.clone(),
        read_only: s.read_only,
        last_ordinal: s.last_ordinal(),
        sampled: s.sampled().to_vec(),
        queue_remaining: s.queue().count(),
        codebook: s.codebook().clone(),
        assignments: s.assignments().into_iter().cloned().collect(),
        summary: s.code_summary(),
        saturation: s.saturation_state(window)?,
    })
}

#[derive(Serialize)]
struct SessionEntry {
    id: String,
    dataset: String,
    label: String,
    read_only: bool,
    last_ordinal: u64,
}

async fn list_sessions(State(st): State<Shared>) -> ApiResult<Json<Vec<SessionEntry>>> {
    blocking(move || {
        let mut out = Vec::new();
        for id in st.sessions.list()? {
            let s = st.sessions.load(&id)?;
            out.push(SessionEntry {
                id,
                dataset: s.dataset.clone(),
                label: s.label.clone(),
                read_only: s.read_only,
                last_ordinal: s.last_ordinal(),
            });
        }
        Ok(Json(out))
    })
    .await
}

/// Samples come from `layout` when given (theoretical sampling then measures
/// distances in that layout), otherwise from the whole `dataset`.
#[derive(Debug, Deserialize)]
pub struct NewSession {
    pub id: String,
    pub label: String,
    pub strategy: Option<Strategy>,
    pub layout: Option<String>,
    pub dataset: Option<String>,
    pub version: Option<String>,
}

async fn create_session(State(st): State<Shared>, JsonBody(req): JsonBody<NewSession>) -> ApiResult<Response> {
    blocking(move || {
        let strategy = req.strategy.unwrap_or(Strategy::Lexicographic);
        let session = match (&req.layout, &req.dataset) {
            (Some(lid), _) => {
                let layout = st.layouts.load(lid)?;
                let set = PointSet::new(layout.points.view(), &layout.ids, &layout.labels)?;
                CodingSession::create(
                    &req.id,
                    &layout.provenance.dataset,
                    &layout.ids,
                    &layout.labels,
                    &req.label,
                    strategy,
                    Some(&set),
                )?
            }
            (None, Some(ds)) => {
                let (ids, labels) = st.catalog.samples(ds, req.version.as_deref())?;
                CodingSession::create(&req.id, ds, &ids, &labels, &req.label, strategy, None)?
            }
            (None, None) => return Err(ApiError::bad_request("give a layout or a dataset")),
        };
        st.sessions.create(&session)?;
        Ok((StatusCode::CREATED, Json(session_view_of(&session, 10)?)).into_response())
    })
    .await
}

#[derive(Deserialize)]
struct ImportQuery {
    id: Option<String>,
    dataset: Option<String>,
    label: Option<String>,
    /// Comma-separated codes that fit the label's category.
    fit: Option<String>,
}

/// Body is the coding table as CSV; the session is read-only.
async fn import_session(State(st): State<Shared>, Query(q): Query<ImportQuery>, body: Bytes) -> ApiResult<Response> {
    blocking(move || {
        let mut opts = ImportOptions::default();
        if let Some(id) = q.id {
            opts.session_id = id;
        }
        if let Some(d) = q.dataset {
            opts.dataset = d;
        }
        if let Some(l) = q.label {
            opts.label = l;
        }
        opts.fit_codes = parse_list(q.fit.as_deref(), "code")?;
        let session = import_coding_csv(&body[..], &opts)?;
        st.sessions.create(&session)?;
        Ok((StatusCode::CREATED, Json(session_view_of(&session, 10)?)).into_response())
    })
    .await
}

#[derive(Deserialize)]
struct WindowQuery {
    window: Option<usize>,
}

async fn session_view(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<WindowQuery>) -> ApiResult<Json<SessionView>> {
    blocking(move || Ok(Json(session_view_of(&st.sessions.load(&id)?, q.window.unwrap_or(10))?))).await
}

#[derive(Deserialize)]
struct EventsQuery {
    after: Option<u64>,
}

async fn session_events(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<EventsQuery>) -> ApiResult<Json<Vec<Event>>> {
    blocking(move || {
        let s = st.sessions.load(&id)?;
        let after = q.after.unwrap_or(0);
        Ok(Json(s.events().iter().filter(|e| e.ordinal > after).cloned().collect()))
    })
    .await
}

/// Body of `POST /api/sessions/{id}/events`: an event in the log's
/// `{type, payload}` shape plus the last ordinal the client saw. `create`
/// on a `code-assigned` event creates the code in the same write.
#[derive(Debug, Deserialize)]
pub struct EventRequest {
    pub expected_ordinal: Option<u64>,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub payload: serde_json::Value,
    pub create: Option<NewCode>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EventAck {
    pub ordinal: u64,
    pub events: Vec<Event>,
}

fn event_kind(req: &EventRequest) -> ApiResult<EventKind> {
    let mut m = serde_json::Map::new();
    let payload = if req.payload.is_null() {
        serde_json::Value::Object(Default::default())
    } else {
        req.payload.clone()
    };
    m.insert(req.kind.clone(), payload);
    serde_json::from_value(serde_json::Value::Object(m)).map_err(|e| ApiError::bad_request(format!("bad event: {e}")))
}

async fn post_event(State(st): State<Shared>, Path(id): Path<String>, JsonBody(req): JsonBody<EventRequest>) -> ApiResult<Json<EventAck>> {
    let kind = event_kind(&req)?;
    if matches!(kind, EventKind::SessionCreated { .. }) {
        return Err(ApiError::unprocessable("sessions are created through POST /api/sessions"));
    }
    blocking(move || {
        let (_, events) = match (kind, req.create) {
            (EventKind::CodeAssigned { sample, code, memo, .. }, Some(create)) => st
                .sessions
                .apply(&id, req.expected_ordinal, |s| s.assign_code(sample, &code, &memo, Some(create)).map(|_| ()))?,
            (_, Some(_)) => return Err(ApiError::bad_request("create is only valid on code-assigned events")),
            (kind, None) => {
                let ev = st.sessions.submit(&id, req.expected_ordinal, kind)?;
                ((), ev)
            }
        };
        let ordinal = events.last().map(|e| e.ordinal).unwrap_or_default();
        Ok(Json(EventAck { ordinal, events }))
    })
    .await
}

#[derive(Deserialize)]
struct QueueQuery {
    limit: Option<usize>,
}

async fn session_queue(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<QueueQuery>) -> ApiResult<Json<Vec<u64>>> {
    blocking(move || Ok(Json(st.sessions.load(&id)?.queue().take(q.limit.unwrap_or(10)).collect()))).await
}

#[derive(Debug, Default, Deserialize)]
pub struct NextRequest {
    pub expected_ordinal: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NextAck {
    pub sample: u64,
    pub ordinal: u64,
}

/// Takes the next sample off the queue.
async fn session_next(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<NextAck>> {
    let req: NextRequest = if body.iter().all(u8::is_ascii_whitespace) {
        NextRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.to_string()))?
    };
    blocking(move || {
        let (sample, events) = st.sessions.apply(&id, req.expected_ordinal, |s| s.next_sample())?;
        Ok(Json(NextAck {
            sample,
            ordinal: events.last().map(|e| e.ordinal).unwrap_or_default(),
        }))
    })
    .await
}

async fn session_export(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    blocking(move || {
        let jsonl = st.sessions.load(&id)?.to_jsonl();
        Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], jsonl).into_response())
    })
    .await
}

// ---- hypotheses

async fn list_hypotheses(State(st): State<Shared>) -> ApiResult<Json<Vec<Hypothesis>>> {
    blocking(move || {
        let mut out = Vec::new();
        for id in st.hypotheses.list()? {
            out.push(st.hypotheses.load(&id)?.hypothesis);
        }
        Ok(Json(out))
    })
    .await
}

/// Membership of `supporting` is checked against `layout` when given, otherwise
/// against the whole dataset.
#[derive(Debug, Deserialize)]
pub struct NewHypothesis {
    pub id: String,
    pub statement: String,
    pub null_statement: String,
    pub dataset: String,
    pub version: Option<String>,
    pub layout: Option<String>,
    pub label: String,
    #[serde(default)]
    pub supporting: Vec<u64>,
    pub audit: Option<UsageAudit>,
}

async fn create_hypothesis(State(st): State<Shared>, JsonBody(req): JsonBody<NewHypothesis>) -> ApiResult<Response> {
    blocking(move || {
        let (ids, labels) = match &req.layout {
            Some(lid) => {
                let l = st.layouts.load(lid)?;
                (l.ids, l.labels)
            }
            None => st.catalog.samples(&req.dataset, req.version.as_deref())?,
        };
        let h = register_hypothesis(
            &req.id,
            &req.statement,
            &req.null_statement,
            &req.dataset,
            &req.label,
            &req.supporting,
            &ids,
            &labels,
        )?;
        let _guard = st.hypothesis_lock.lock().expect("hypothesis lock");
        match st.hypotheses.load(&req.id) {
            Ok(_) => {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "already_exists",
                    format!("hypothesis {:?} exists", req.id),
                ))
            }
            Err(datascope::hypothesis::HypothesisError::NotFound(_)) => {}
            Err(e) => return Err(e.into()),
        }
        let audit = req.audit.unwrap_or_else(|| UsageAudit {
            dataset: req.dataset.clone(),
            ..UsageAudit::default()
        });
        let rec = StoredHypothesis { hypothesis: h, audit };
        st.hypotheses.save(&rec)?;
        Ok((StatusCode::CREATED, Json(rec)).into_response())
    })
    .await
}

async fn hypothesis_view(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<StoredHypothesis>> {
    blocking(move || Ok(Json(st.hypotheses.load(&id)?))).await
}

/// Evidence by reference; the server fills in provenance, reports and summaries.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EvidenceRequest {
    Layout {
        layout_id: String,
        #[serde(default)]
        highlights: Vec<u64>,
        #[serde(default)]
        note: String,
    },
    Neighborhood {
        layout_id: String,
        anchor: u64,
        space: Option<Space>,
        label: Option<String>,
        comparison: Option<u64>,
    },
    Coding {
        session_id: String,
        window: Option<usize>,
    },
    Excerpt {
        sample: u64,
        text: String,
        #[serde(default)]
        note: String,
    },
}

fn resolve_evidence(st: &AppState, req: EvidenceRequest) -> ApiResult<Evidence> {
    let provenance = |id: &str| -> ApiResult<Provenance> { Ok(st.layouts.sidecar(id)?.provenance) };
    Ok(match req {
        EvidenceRequest::Layout { layout_id, highlights, note } => {
            let layout = st.layouts.load(&layout_id)?;
            if let Some(h) = highlights.iter().find(|h| layout.position_of(**h).is_none()) {
                return Err(ApiError::unprocessable(format!("highlight {h} is not in layout {layout_id}")));
            }
            Evidence::Layout {
                provenance: layout.provenance,
                layout_id,
                highlights,
                note,
            }
        }
        EvidenceRequest::Neighborhood { layout_id, anchor, space, label, comparison } => {
            let opts = ReportOptions {
                label,
                comparison,
                include_distances: false,
            };
            let (report, _) = neighbor_for(st, &layout_id, space.unwrap_or(Space::TopicSpace), anchor, &opts)?;
            Evidence::Neighborhood {
                provenance: provenance(&layout_id)?,
                layout_id,
                report,
            }
        }
        EvidenceRequest::Coding { session_id, window } => {
            let s = st.sessions.load(&session_id)?;
            let saturation = window.map(|w| s.saturation_state(w)).transpose()?;
            Evidence::Coding {
                summary: s.code_summary(),
                saturation,
                session_id,
            }
        }
        EvidenceRequest::Excerpt { sample, text, note } => Evidence::Excerpt { sample, text, note },
    })
}

/// Load, change and save one hypothesis under the store lock.
fn modify_hypothesis<T>(st: &AppState, id: &str, f: impl FnOnce(&mut StoredHypothesis) -> ApiResult<T>) -> ApiResult<(T, StoredHypothesis)> {
    let _guard = st.hypothesis_lock.lock().expect("hypothesis lock");
    let mut rec = st.hypotheses.load(id)?;
    let out = f(&mut rec)?;
    st.hypotheses.save(&rec)?;
    Ok((out, rec))
}

#[derive(Serialize)]
struct EvidenceAck {
    index: usize,
    hypothesis: Hypothesis,
}

async fn add_evidence(State(st): State<Shared>, Path(id): Path<String>, JsonBody(req): JsonBody<EvidenceRequest>) -> ApiResult<Json<EvidenceAck>> {
    blocking(move || {
        let evidence = resolve_evidence(&st, req)?;
        let (index, rec) = modify_hypothesis(&st, &id, |r| Ok(r.hypothesis.attach_evidence(evidence)?))?;
        Ok(Json(EvidenceAck {
            index,
            hypothesis: rec.hypothesis,
        }))
    })
    .await
}

async fn set_audit(State(st): State<Shared>, Path(id): Path<String>, JsonBody(audit): JsonBody<UsageAudit>) -> ApiResult<Json<StoredHypothesis>> {
    blocking(move || {
        let ((), rec) = modify_hypothesis(&st, &id, |r| {
            r.audit = audit;
            Ok(())
        })?;
        Ok(Json(rec))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct VerdictRequest {
    pub verdict: String,
    #[serde(default)]
    pub rationale: String,
}

async fn set_verdict(State(st): State<Shared>, Path(id): Path<String>, JsonBody(req): JsonBody<VerdictRequest>) -> ApiResult<Json<Hypothesis>> {
    let verdict: Verdict = req.verdict.parse().map_err(ApiError::bad_request)?;
    blocking(move || {
        let ((), rec) = modify_hypothesis(&st, &id, |r| Ok(r.hypothesis.record_verdict(verdict, &req.rationale)?))?;
        Ok(Json(rec.hypothesis))
    })
    .await
}

#[derive(Deserialize)]
struct ReportQuery {
    format: Option<String>,
}

/// Layouts named by the evidence that can still be loaded.
pub fn evidence_layouts(store: &crate::LayoutStore, h: &Hypothesis) -> BTreeMap<String, EmbeddingLayout> {
    let mut out = BTreeMap::new();
    for e in &h.evidence {
        let id = match e {
            Evidence::Layout { layout_id, .. } | Evidence::Neighborhood { layout_id, .. } => layout_id,
            _ => continue,
        };
        if !out.contains_key(id) {
            if let Ok(l) = store.load(id) {
                out.insert(id.clone(), l);
            }
        }
    }
    out
}

async fn report(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<ReportQuery>) -> ApiResult<Response> {
    blocking(move || {
        let rec = st.hypotheses.load(&id)?;
        let layouts = evidence_layouts(&st.layouts, &rec.hypothesis);
        let r = render_report(&rec.hypothesis, &rec.audit, &layouts);
        match q.format.as_deref().unwrap_or("json") {
            "json" => Ok(([(header::CONTENT_TYPE, "application/json")], r.json).into_response()),
            "markdown" | "md" => Ok(([(header::CONTENT_TYPE, "text/markdown; charset=utf-8")], r.markdown).into_response()),
            other => Err(ApiError::bad_request(format!("unknown format {other:?} (json | markdown)"))),
        }
    })
    .await
}
