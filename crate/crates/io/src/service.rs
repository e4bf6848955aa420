//! JSON-over-HTTP access to one loaded data set.
//!
//! | method | path | result |
//! |---|---|---|
//! | GET | `/dataset?x=&y=&bins=` | manifest, channel statistics, optional binned density of two channels |
//! | PUT | `/traits/{name}` | stores a trait document as the next version of `name` |
//! | GET | `/traits/{name}?version=` | canonical trait document |
//! | GET | `/fields/{trait}/slice?axis=&index=` | distance values of one slice |
//! | POST | `/query?mode=async` | runs a query, returns its segmentation id |
//! | GET | `/jobs/{id}` | state of a query started in async mode |
//! | GET | `/segments/{id}` | segment table and query specification |
//! | GET | `/segments/{id}/slice?axis=&index=` | labels of one slice |
//! | GET | `/segments/{id}/labels` | the whole label volume, `int32` little-endian |
//! | GET | `/tree/{trait}?metric=&simplify=&superlevel=` | merge tree export |
//! | GET | `/dictionary/suggestions` | ranked atom traits |
//!
//! The data set is an immutable snapshot. Storing a trait under an existing
//! name adds a version; older versions stay addressable. Fields, trees and
//! segmentations are cached under content hashes and each is computed at
//! most once. Slices are row-major with the lower remaining axis fastest.
//! No CORS headers are sent, so browsers only allow same-origin callers.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use timt_core::dictionary::DictionaryError;
use timt_core::field::FieldError;
use timt_core::merge_tree::Metric;
use timt_core::queries::{QuerySpec, Simplification};
use timt_core::traits::{Evaluation, Semantics, TraitError};
use tokio::sync::OnceCell;

use crate::dataset::{dataset_hash, Dataset};
use crate::dictionary_io::StoredDictionary;
use crate::error::{parse_json, IoError};
use crate::pipeline::{dictionary_suggestions, evaluate_trait, segment_field};
use crate::segmentation_io::{encode_labels, SegmentationSidecar};
use crate::trait_doc::TraitDocument;
use crate::tree_export::{build_tree, export_tree, field_hash, Direction, TreeExport};

pub const DEFAULT_BINS: usize = 128;
pub const MAX_BINS: usize = 1024;

type Cell<T> = Arc<OnceCell<Arc<T>>>;

/// A computed segmentation and where it came from.
#[derive(Debug)]
pub struct StoredSegmentation {
    pub id: String,
    pub trait_name: String,
    pub trait_version: usize,
    pub sidecar: SegmentationSidecar,
    pub labels: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum JobState {
    Running,
    Done,
    Failed(String),
}

pub struct Session {
    dataset: Dataset,
    dataset_sha256: String,
    semantics: Option<Semantics>,
    suggestions: Option<Vec<serde_json::Value>>,
    traits: RwLock<BTreeMap<String, Vec<Arc<TraitDocument>>>>,
    fields: Mutex<HashMap<String, Cell<Evaluation>>>,
    trees: Mutex<HashMap<String, Cell<TreeExport>>>,
    segmentations: Mutex<HashMap<String, Cell<StoredSegmentation>>>,
    jobs: Mutex<HashMap<String, JobState>>,
}

impl Session {
    /// `semantics` overrides the semantics of every stored trait when set.
    pub fn new(dataset: Dataset, dictionary: Option<StoredDictionary>, semantics: Option<Semantics>) -> Result<Self, IoError> {
        let dataset_sha256 = dataset_hash(&dataset)?;
        let suggestions = match &dictionary {
            Some(stored) => Some(
                dictionary_suggestions(stored, &dataset.field)?
                    .into_iter()
                    .map(|s| {
                        let mut doc = TraitDocument::new(s.trait_expr);
                        if let Some(sem) = semantics {
                            doc.semantics = sem;
                        }
                        json!({ "atom": s.atom, "score": s.score, "trait": doc })
                    })
                    .collect(),
            ),
            None => None,
        };
        Ok(Session {
            dataset,
            dataset_sha256,
            semantics,
            suggestions,
            traits: RwLock::default(),
            fields: Mutex::default(),
            trees: Mutex::default(),
            segmentations: Mutex::default(),
            jobs: Mutex::default(),
        })
    }

    /// Stores `doc` as the next version of `name` and returns that version (from 1).
    pub fn put_trait(&self, name: &str, doc: TraitDocument) -> usize {
        let mut traits = self.traits.write().expect("trait table poisoned");
        let versions = traits.entry(name.to_string()).or_default();
        versions.push(Arc::new(doc));
        versions.len()
    }

    fn get_trait(&self, name: &str, version: Option<usize>) -> Result<(Arc<TraitDocument>, usize), ApiError> {
        let traits = self.traits.read().expect("trait table poisoned");
        let versions = traits
            .get(name)
            .ok_or_else(|| ApiError::not_found(format!("no trait named `{name}`")))?;
        let v = version.unwrap_or(versions.len());
        let doc = v
            .checked_sub(1)
            .and_then(|i| versions.get(i))
            .ok_or_else(|| ApiError::not_found(format!("trait `{name}` has no version {v}")))?;
        Ok((Arc::clone(doc), v))
    }

    /// The document as evaluated: with the session's semantics override.
    fn effective(&self, doc: &TraitDocument) -> TraitDocument {
        let mut doc = doc.clone();
        if let Some(s) = self.semantics {
            doc.semantics = s;
        }
        doc
    }

    async fn field(self: &Arc<Self>, doc: &TraitDocument) -> Result<(String, Arc<Evaluation>), ApiError> {
        let doc = self.effective(doc);
        let key = hash_hex(&[&doc.canonical_bytes()]);
        let cell = cell_for(&self.fields, &key);
        let session = Arc::clone(self);
        let ev = cell
            .get_or_try_init(|| async move {
                blocking(move || evaluate_trait(&doc, &session.dataset.field).map(Arc::new)).await
            })
            .await?;
        Ok((key, Arc::clone(ev)))
    }

    async fn tree(self: &Arc<Self>, doc: &TraitDocument, direction: Direction, simplification: Simplification) -> Result<Arc<TreeExport>, ApiError> {
        let (field_key, ev) = self.field(doc).await?;
        let params = serde_json::to_vec(&(direction, simplification)).expect("serializes");
        let key = hash_hex(&[field_key.as_bytes(), &params]);
        let cell = cell_for(&self.trees, &key);
        let t = cell
            .get_or_try_init(|| async move {
                blocking(move || {
                    let tree = build_tree(&ev.field, direction, simplification)?;
                    Ok(Arc::new(export_tree(&tree, &ev.field, direction, simplification)))
                })
                .await
            })
            .await?;
        Ok(Arc::clone(t))
    }

    /// Content hash naming the segmentation of `req`.
    fn segmentation_id(&self, doc: &TraitDocument, req: &QueryRequest) -> String {
        let doc = self.effective(doc);
        let spec = serde_json::to_vec(&(req.spec, req.superlevel)).expect("serializes");
        hash_hex(&[self.dataset_sha256.as_bytes(), &doc.canonical_bytes(), &spec])
    }

    async fn segment(self: &Arc<Self>, id: String, name: String, version: usize, doc: Arc<TraitDocument>, req: QueryRequest) -> Result<Arc<StoredSegmentation>, ApiError> {
        let cell = cell_for(&self.segmentations, &id);
        let session = Arc::clone(self);
        let s = cell
            .get_or_try_init(|| async move {
                let (_, ev) = session.field(&doc).await?;
                let direction = Direction::from_superlevel(req.superlevel);
                blocking(move || {
                    let seg = segment_field(&ev.field, direction, &req.spec)?;
                    let sidecar = SegmentationSidecar::new(&seg, direction, field_hash(&ev.field), format!("/segments/{id}/labels"));
                    Ok(Arc::new(StoredSegmentation {
                        id,
                        trait_name: name,
                        trait_version: version,
                        sidecar,
                        labels: seg.labels,
                    }))
                })
                .await
            })
            .await?;
        Ok(Arc::clone(s))
    }

    fn stored_segmentation(&self, id: &str) -> Result<Arc<StoredSegmentation>, ApiError> {
        let cell = self.segmentations.lock().expect("cache poisoned").get(id).cloned();
        match cell.as_ref().and_then(|c| c.get()) {
            Some(s) => Ok(Arc::clone(s)),
            None => match self.jobs.lock().expect("jobs poisoned").get(id) {
                Some(JobState::Running) => Err(ApiError::new(StatusCode::ACCEPTED, "running", format!("segmentation {id} is still running"))),
                _ => Err(ApiError::not_found(format!("no segmentation `{id}`"))),
            },
        }
    }
}

fn cell_for<T>(map: &Mutex<HashMap<String, Cell<T>>>, key: &str) -> Cell<T> {
    Arc::clone(map.lock().expect("cache poisoned").entry(key.to_string()).or_default())
}

fn hash_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, IoError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

/// An HTTP error with a JSON body `{"error": {"kind", "message", ...}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": { "kind": kind, "message": message.into() } }),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }
}

impl From<IoError> for ApiError {
    fn from(e: IoError) -> Self {
        let status = match &e {
            IoError::Trait(TraitError::UnknownChannel(_) | TraitError::DimensionMismatch { .. })
            | IoError::Field(FieldError::UnknownChannel(_))
            | IoError::Dictionary(DictionaryError::DimensionMismatch { .. }) => StatusCode::CONFLICT,
            IoError::File { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError { status, body: e.to_json() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(session: Session) -> Router {
    Router::new()
        .route("/dataset", get(get_dataset))
        .route("/traits/{name}", put(put_trait).get(get_trait))
        .route("/fields/{name}/slice", get(get_field_slice))
        .route("/query", post(post_query))
        .route("/jobs/{id}", get(get_job))
        .route("/segments/{id}", get(get_segments))
        .route("/segments/{id}/slice", get(get_segment_slice))
        .route("/segments/{id}/labels", get(get_segment_labels))
        .route("/tree/{name}", get(get_tree))
        .route("/dictionary/suggestions", get(get_suggestions))
        .with_state(Arc::new(session))
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, session: Session) -> std::io::Result<()> {
    axum::serve(listener, router(session))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug, Deserialize)]
struct ScatterParams {
    x: Option<String>,
    y: Option<String>,
    bins: Option<usize>,
}

async fn get_dataset(State(s): State<Arc<Session>>, Query(q): Query<ScatterParams>) -> ApiResult<Json<serde_json::Value>> {
    let mf = &s.dataset.field;
    let channels: Vec<_> = mf
        .channels()
        .iter()
        .map(|c| {
            let (lo, hi) = c.range();
            let mean = c.values.iter().sum::<f64>() / c.values.len() as f64;
            json!({ "name": c.name, "unit": c.unit, "provenance": c.provenance, "min": lo, "max": hi, "mean": mean })
        })
        .collect();
    let mut body = json!({
        "manifest": s.dataset.manifest,
        "sha256": s.dataset_sha256,
        "vertices": mf.len(),
        "channels": channels,
    });
    match (q.x, q.y) {
        (Some(x), Some(y)) => {
            let bins = q.bins.unwrap_or(DEFAULT_BINS);
            if !(1..=MAX_BINS).contains(&bins) {
                return Err(ApiError::unprocessable(format!("bins must lie in 1..={MAX_BINS}")));
            }
            body["scatter"] = density(&s.dataset, &x, &y, bins)?;
        }
        (None, None) => {}
        _ => return Err(ApiError::unprocessable("scatter needs both x and y")),
    }
    Ok(Json(body))
}

/// Vertex counts on a `bins x bins` grid spanning the two channel ranges.
fn density(ds: &Dataset, x: &str, y: &str, bins: usize) -> ApiResult<serde_json::Value> {
    let channel = |name: &str| {
        ds.field
            .channel(name)
            .map_err(|_| ApiError::not_found(format!("no channel named `{name}`")))
    };
    let (cx, cy) = (channel(x)?, channel(y)?);
    let (rx, ry) = (cx.range(), cy.range());
    let bin = |v: f64, (lo, hi): (f64, f64)| {
        if hi > lo {
            (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
        } else {
            0
        }
    };
    let mut counts = vec![0u64; bins * bins];
    for (vx, vy) in cx.values.iter().zip(&cy.values) {
        counts[bin(*vy, ry) * bins + bin(*vx, rx)] += 1;
    }
    Ok(json!({
        "x": x, "y": y, "bins": bins,
        "x_range": [rx.0, rx.1], "y_range": [ry.0, ry.1],
        "shape": [bins, bins], "dtype": "u64", "order": "row_major", "rows": "y",
        "counts": counts,
    }))
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.len() <= 128 && name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

async fn put_trait(State(s): State<Arc<Session>>, Path(name): Path<String>, body: Bytes) -> ApiResult<Response> {
    if !valid_name(&name) {
        return Err(ApiError::unprocessable("trait names use letters, digits, `-`, `_` and `.`"));
    }
    let doc = TraitDocument::parse(&body)?;
    doc.check_channels(&s.dataset.field)?;
    let canonical = doc.canonical_bytes();
    let version = s.put_trait(&name, doc);
    let body = json!({ "name": name, "version": version, "sha256": hash_hex(&[&canonical]) });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Debug, Deserialize)]
struct VersionParam {
    version: Option<usize>,
}

async fn get_trait(State(s): State<Arc<Session>>, Path(name): Path<String>, Query(q): Query<VersionParam>) -> ApiResult<Response> {
    let (doc, _) = s.get_trait(&name, q.version)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], doc.canonical_bytes()).into_response())
}

#[derive(Debug, Deserialize)]
struct SliceParams {
    axis: usize,
    index: usize,
    version: Option<usize>,
}

fn slice_of(ds: &Dataset, axis: usize, index: usize) -> ApiResult<(Vec<usize>, [usize; 2])> {
    ds.field.grid().slice_indices(axis, index).ok_or_else(|| {
        ApiError::unprocessable(format!("no slice {index} along axis {axis} in a {:?} grid", ds.field.grid().dims))
    })
}

async fn get_field_slice(State(s): State<Arc<Session>>, Path(name): Path<String>, Query(q): Query<SliceParams>) -> ApiResult<Json<serde_json::Value>> {
    let (doc, version) = s.get_trait(&name, q.version)?;
    let (idx, shape) = slice_of(&s.dataset, q.axis, q.index)?;
    let (_, ev) = s.field(&doc).await?;
    let values: Vec<f64> = idx.iter().map(|&i| ev.field.values()[i]).collect();
    Ok(Json(json!({
        "trait": name, "version": version, "axis": q.axis, "index": q.index,
        "shape": shape, "dtype": "f64", "order": "row_major",
        "clamped": ev.clamped, "capped": ev.capped,
        "values": values,
    })))
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    #[serde(rename = "trait")]
    pub trait_name: String,
    #[serde(default)]
    pub version: Option<usize>,
    pub spec: QuerySpec,
    #[serde(default)]
    pub superlevel: bool,
}

#[derive(Debug, Deserialize)]
struct ModeParam {
    mode: Option<String>,
}

async fn post_query(State(s): State<Arc<Session>>, Query(m): Query<ModeParam>, body: Bytes) -> ApiResult<Response> {
    let req: QueryRequest = parse_json(&body)?;
    req.spec.validate().map_err(IoError::from)?;
    let (doc, version) = s.get_trait(&req.trait_name, req.version)?;
    let id = s.segmentation_id(&doc, &req);
    let name = req.trait_name.clone();
    match m.mode.as_deref() {
        None | Some("sync") => {
            let seg = s.segment(id, name, version, doc, req).await?;
            Ok(Json(summary(&seg)).into_response())
        }
        Some("async") => {
            let started = {
                let mut jobs = s.jobs.lock().expect("jobs poisoned");
                let done = s.segmentations.lock().expect("cache poisoned").get(&id).is_some_and(|c| c.initialized());
                if done {
                    jobs.insert(id.clone(), JobState::Done);
                    false
                } else if jobs.get(&id) == Some(&JobState::Running) {
                    false
                } else {
                    jobs.insert(id.clone(), JobState::Running);
                    true
                }
            };
            if started {
                let (s2, id2) = (Arc::clone(&s), id.clone());
                tokio::spawn(async move {
                    let state = match s2.segment(id2.clone(), name, version, doc, req).await {
                        Ok(_) => JobState::Done,
                        Err(e) => JobState::Failed(e.body.to_string()),
                    };
                    s2.jobs.lock().expect("jobs poisoned").insert(id2, state);
                });
            }
            let body = json!({ "id": id, "status": "running", "poll": format!("/jobs/{id}") });
            Ok((StatusCode::ACCEPTED, Json(body)).into_response())
        }
        Some(other) => Err(ApiError::unprocessable(format!("unknown mode `{other}`, expected sync or async"))),
    }
}

fn summary(seg: &StoredSegmentation) -> serde_json::Value {
    json!({
        "id": seg.id,
        "segments": seg.sidecar.segments.len(),
        "background": seg.labels.iter().filter(|&&l| l == seg.sidecar.background).count(),
        "notes": seg.sidecar.notes,
    })
}

async fn get_job(State(s): State<Arc<Session>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let state = s.jobs.lock().expect("jobs poisoned").get(&id).cloned();
    match state {
        Some(JobState::Running) => Ok(Json(json!({ "id": id, "status": "running" }))),
        Some(JobState::Done) => Ok(Json(json!({ "id": id, "status": "done", "result": format!("/segments/{id}") }))),
        Some(JobState::Failed(error)) => Ok(Json(json!({ "id": id, "status": "failed", "error": error }))),
        None => Err(ApiError::not_found(format!("no job `{id}`"))),
    }
}

async fn get_segments(State(s): State<Arc<Session>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let seg = s.stored_segmentation(&id)?;
    let mut body = serde_json::to_value(&seg.sidecar).expect("serializes");
    body["id"] = seg.id.clone().into();
    body["trait"] = seg.trait_name.clone().into();
    body["trait_version"] = seg.trait_version.into();
    Ok(Json(body))
}

async fn get_segment_slice(State(s): State<Arc<Session>>, Path(id): Path<String>, Query(q): Query<SliceParams>) -> ApiResult<Json<serde_json::Value>> {
    let seg = s.stored_segmentation(&id)?;
    let (idx, shape) = slice_of(&s.dataset, q.axis, q.index)?;
    let labels: Vec<i32> = idx.iter().map(|&i| seg.labels[i]).collect();
    Ok(Json(json!({
        "id": id, "axis": q.axis, "index": q.index,
        "shape": shape, "dtype": "i32", "order": "row_major",
        "background": seg.sidecar.background,
        "labels": labels,
    })))
}

async fn get_segment_labels(State(s): State<Arc<Session>>, Path(id): Path<String>) -> ApiResult<Response> {
    let seg = s.stored_segmentation(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], encode_labels(&seg.labels)).into_response())
}

#[derive(Debug, Deserialize)]
struct TreeParams {
    metric: Option<String>,
    simplify: Option<f64>,
    #[serde(default)]
    superlevel: bool,
    version: Option<usize>,
}

async fn get_tree(State(s): State<Arc<Session>>, Path(name): Path<String>, Query(q): Query<TreeParams>) -> ApiResult<Response> {
    let (doc, _) = s.get_trait(&name, q.version)?;
    let metric = match q.metric.as_deref() {
        None => Metric::Persistence,
        Some(m) => Metric::parse(m).ok_or_else(|| ApiError::unprocessable(format!("unknown metric `{m}`")))?,
    };
    let threshold = q.simplify.unwrap_or(0.0);
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(ApiError::unprocessable("simplify must be a finite non-negative number"));
    }
    let direction = Direction::from_superlevel(q.superlevel);
    let tree = s.tree(&doc, direction, Simplification { metric, threshold }).await?;
    let body = serde_json::to_vec(&*tree).expect("serializes");
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn get_suggestions(State(s): State<Arc<Session>>) -> ApiResult<Json<serde_json::Value>> {
    match &s.suggestions {
        Some(rows) => Ok(Json(json!({ "suggestions": rows }))),
        None => Err(ApiError::not_found("no dictionary loaded")),
    }
}
