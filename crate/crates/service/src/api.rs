//! HTTP API. Each document's state is a [`Session`]; mutations on one
//! document are serialized by its lock, runs on different inlets proceed
//! concurrently in the orchestrator.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use phraselette_core::model::{CharRange, ConfigError, Document, DocumentError, InletId, WellConfig, WellId, WellKind};
use phraselette_core::orchestrator::{Orchestrator, OrchestratorError, RunTarget};
use phraselette_core::wells::Presets;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{json, Value};

use crate::session::{Actor, HistoryEntry, Session, SessionError};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_owned(),
            message: message.into(),
        }
    }

    fn bad(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found(code: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, format!("no such id: {id}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"code": self.code, "message": self.message}))).into_response()
    }
}

impl From<DocumentError> for ApiError {
    fn from(e: DocumentError) -> Self {
        let (status, code) = match &e {
            DocumentError::OutOfBounds { .. } => (StatusCode::BAD_REQUEST, "OutOfBounds"),
            DocumentError::OverlappingInlet { .. } => (StatusCode::BAD_REQUEST, "OverlappingInlet"),
            DocumentError::EmptyRange(_) => (StatusCode::BAD_REQUEST, "EmptyRange"),
            DocumentError::EmptyReplacement => (StatusCode::BAD_REQUEST, "EmptyReplacement"),
            DocumentError::UnknownInlet(_) => (StatusCode::NOT_FOUND, "UnknownInlet"),
            DocumentError::StaleGeneration { .. } => (StatusCode::CONFLICT, "StaleGeneration"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<ConfigError> for ApiError {
    fn from(e: ConfigError) -> Self {
        Self::bad("InvalidWellConfig", e.to_string())
    }
}

impl From<OrchestratorError> for ApiError {
    fn from(e: OrchestratorError) -> Self {
        match e {
            OrchestratorError::Document(d) => d.into(),
            OrchestratorError::Config(c) => c.into(),
            OrchestratorError::NoActiveWells => Self::bad("NoActiveWells", e.to_string()),
            OrchestratorError::InactiveWell(_) => Self::bad("InactiveWell", e.to_string()),
            OrchestratorError::Constraint { ref source, .. } if source.is_backend() => {
                Self::new(StatusCode::SERVICE_UNAVAILABLE, "BackendUnavailable", e.to_string())
            }
            OrchestratorError::Constraint { .. } => Self::bad("InvalidConstraint", e.to_string()),
            OrchestratorError::UnknownJob(id) => Self::not_found("UnknownJob", &id),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::SchemaVersionMismatch { .. } => Self::bad("SchemaVersionMismatch", e.to_string()),
            SessionError::Parse(_) => Self::bad("InvalidSession", e.to_string()),
            SessionError::Io { .. } => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Io", e.to_string()),
        }
    }
}

fn body<T>(r: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    r.map(|Json(v)| v).map_err(|e| ApiError::bad("InvalidBody", e.body_text()))
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !id.starts_with('.')
}

type Doc = Arc<Mutex<Session>>;

#[derive(Default)]
struct Index {
    /// Inlet and well ids to their document.
    inlets: HashMap<InletId, String>,
    wells: HashMap<WellId, String>,
    /// Jobs per inlet, oldest first, and the document of each job.
    inlet_jobs: HashMap<InletId, Vec<String>>,
    jobs: HashMap<String, String>,
    next_doc: u64,
}

impl Index {
    fn forget(&mut self, s: &Session) {
        for i in s.document.inlets() {
            self.inlets.remove(&i.id);
        }
        for w in &s.well_configs {
            self.wells.remove(&w.well_id);
        }
    }

    fn adopt(&mut self, s: &Session) {
        for i in s.document.inlets() {
            self.inlets.insert(i.id.clone(), s.document.id.clone());
        }
        for w in &s.well_configs {
            self.wells.insert(w.well_id.clone(), s.document.id.clone());
        }
    }

    /// An inlet or well id in `s` already owned by another document.
    fn clash(&self, s: &Session) -> Option<String> {
        let other = |owner: Option<&String>| owner.is_some_and(|d| *d != s.document.id);
        s.document
            .inlets()
            .iter()
            .map(|i| (i.id.as_str(), other(self.inlets.get(&i.id))))
            .chain(s.well_configs.iter().map(|w| (w.well_id.as_str(), other(self.wells.get(&w.well_id)))))
            .find(|(_, clash)| *clash)
            .map(|(id, _)| id.to_owned())
    }
}

pub struct AppState {
    orch: Orchestrator,
    presets: Presets,
    sessions_dir: Option<PathBuf>,
    docs: RwLock<BTreeMap<String, Doc>>,
    index: Mutex<Index>,
}

impl AppState {
    /// Loads every session file in `sessions_dir`, if given.
    pub fn new(orch: Orchestrator, presets: Presets, sessions_dir: Option<PathBuf>) -> Result<Self, SessionError> {
        let state = Self {
            orch,
            presets,
            sessions_dir,
            docs: RwLock::new(BTreeMap::new()),
            index: Mutex::new(Index::default()),
        };
        if let Some(dir) = &state.sessions_dir {
            let io = |source| SessionError::Io {
                path: dir.clone(),
                source,
            };
            std::fs::create_dir_all(dir).map_err(io)?;
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(io)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for p in paths {
                let s = Session::load(&p)?;
                state.install(s);
            }
        }
        Ok(state)
    }

    pub fn orchestrator(&self) -> &Orchestrator {
        &self.orch
    }

    fn install(&self, s: Session) {
        self.orch.sync_document(&s.document);
        let id = s.document.id.clone();
        // lock order everywhere: docs, then a document, then the index
        let mut docs = self.docs.write().unwrap();
        let old = docs.get(&id).map(|d| d.lock().unwrap().clone());
        let mut index = self.index.lock().unwrap();
        if let Some(old) = &old {
            index.forget(old);
        }
        index.adopt(&s);
        drop(index);
        docs.insert(id, Arc::new(Mutex::new(s)));
    }

    fn doc(&self, id: &str) -> Result<Doc, ApiError> {
        self.docs
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("UnknownDocument", id))
    }

    fn doc_of_inlet(&self, inlet: &InletId) -> Result<Doc, ApiError> {
        let id = self.index.lock().unwrap().inlets.get(inlet).cloned();
        self.doc(&id.ok_or_else(|| ApiError::not_found("UnknownInlet", inlet.as_str()))?)
    }

    fn persist(&self, s: &Session) {
        if let Some(dir) = &self.sessions_dir {
            if let Err(e) = s.save(&session_path(dir, &s.document.id)) {
                log::error!("saving session {}: {e}", s.document.id);
            }
        }
    }
}

pub fn session_path(dir: &Path, doc_id: &str) -> PathBuf {
    dir.join(format!("{doc_id}.json"))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/documents", post(create_document))
        .route("/documents/{id}", get(get_document).patch(edit_document))
        .route("/documents/{id}/inlets", post(create_inlet))
        .route("/documents/{id}/wells", post(add_well))
        .route("/documents/{doc}/inlets/{inlet}/run", post(run))
        .route("/inlets/{id}", axum::routing::delete(delete_inlet))
        .route("/inlets/{id}/accept", post(accept))
        .route("/wells/presets", get(presets))
        .route("/wells/{id}", patch(patch_well))
        .route("/jobs/{id}", get(job))
        .route("/sessions/{id}", get(get_session).put(put_session))
        .with_state(state)
}

type St = State<Arc<AppState>>;
type ApiResult<T> = Result<T, ApiError>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewDocument {
    id: Option<String>,
    text: String,
}

async fn create_document(State(st): St, req: Result<Json<NewDocument>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let req = body(req)?;
    let mut docs = st.docs.write().unwrap();
    let id = match req.id {
        Some(id) if !valid_id(&id) => return Err(ApiError::bad("InvalidId", format!("bad document id {id:?}"))),
        Some(id) if docs.contains_key(&id) => {
            return Err(ApiError::bad("DuplicateId", format!("document {id} exists")))
        }
        Some(id) => id,
        None => {
            let mut index = st.index.lock().unwrap();
            loop {
                index.next_doc += 1;
                let id = format!("doc-{}", index.next_doc);
                if !docs.contains_key(&id) {
                    break id;
                }
            }
        }
    };
    let mut s = Session::new(Document::new(id.clone(), req.text));
    s.record(Actor::User, "createDocument", json!({"documentId": id}));
    st.persist(&s);
    let doc = s.document.clone();
    docs.insert(id, Arc::new(Mutex::new(s)));
    Ok((StatusCode::CREATED, Json(doc)))
}

async fn get_document(State(st): St, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Document>> {
    Ok(Json(st.doc(&id)?.lock().unwrap().document.clone()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TextEdit {
    start: usize,
    end: usize,
    text: String,
}

async fn edit_document(
    State(st): St,
    UrlPath(id): UrlPath<String>,
    req: Result<Json<TextEdit>, JsonRejection>,
) -> ApiResult<Json<Document>> {
    let req = body(req)?;
    let doc = st.doc(&id)?;
    let mut s = doc.lock().unwrap();
    s.document.splice(CharRange::new(req.start, req.end), &req.text)?;
    st.orch.sync_document(&s.document);
    s.record(
        Actor::User,
        "editText",
        json!({"start": req.start, "end": req.end, "text": req.text}),
    );
    st.persist(&s);
    Ok(Json(s.document.clone()))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct NewInlet {
    start: usize,
    end: usize,
    #[serde(default)]
    active_well_ids: BTreeSet<WellId>,
}

fn check_wells<'a>(s: &Session, ids: impl IntoIterator<Item = &'a WellId>) -> ApiResult<()> {
    for id in ids {
        if s.well(id.as_str()).is_none() {
            return Err(ApiError::bad("UnknownWell", format!("well {id} is not configured on this document")));
        }
    }
    Ok(())
}

async fn create_inlet(
    State(st): St,
    UrlPath(id): UrlPath<String>,
    req: Result<Json<NewInlet>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let req = body(req)?;
    let doc = st.doc(&id)?;
    let mut s = doc.lock().unwrap();
    check_wells(&s, &req.active_well_ids)?;
    let mut document = s.document.clone();
    let inlet_id = document.create_inlet(CharRange::new(req.start, req.end))?.id.clone();
    if !req.active_well_ids.is_empty() {
        document.set_active_wells(&inlet_id, req.active_well_ids)?;
    }
    s.document = document;
    let inlet = s.document.inlet(&inlet_id)?.clone();
    st.index.lock().unwrap().inlets.insert(inlet_id.clone(), id);
    s.record(
        Actor::User,
        "createInlet",
        json!({"inletId": inlet_id, "start": req.start, "end": req.end}),
    );
    st.persist(&s);
    Ok((StatusCode::CREATED, Json(inlet)))
}

async fn delete_inlet(State(st): St, UrlPath(id): UrlPath<InletId>) -> ApiResult<Json<Document>> {
    let doc = st.doc_of_inlet(&id)?;
    let mut s = doc.lock().unwrap();
    s.document.remove_inlet(&id)?;
    st.index.lock().unwrap().inlets.remove(&id);
    s.record(Actor::User, "deleteInlet", json!({"inletId": id}));
    st.persist(&s);
    Ok(Json(s.document.clone()))
}

async fn presets(State(st): St) -> Json<Value> {
    Json(json!({
        "descriptors": st.orch.registry().descriptors(),
        "presets": st.presets.all(),
    }))
}

fn default_true() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct NewWell {
    well_id: Option<WellId>,
    kind: WellKind,
    prompt_description: Option<String>,
    #[serde(default)]
    parameters: BTreeMap<String, Value>,
    #[serde(default = "default_true")]
    active: bool,
}

async fn add_well(
    State(st): St,
    UrlPath(id): UrlPath<String>,
    req: Result<Json<NewWell>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let req = body(req)?;
    let doc = st.doc(&id)?;
    let mut s = doc.lock().unwrap();
    let mut index = st.index.lock().unwrap();
    let well_id = match req.well_id {
        Some(w) if !valid_id(w.as_str()) => return Err(ApiError::bad("InvalidId", format!("bad well id {w:?}"))),
        Some(w) if index.wells.contains_key(&w) => {
            return Err(ApiError::bad("DuplicateId", format!("well {w} exists")))
        }
        Some(w) => w,
        None => (1..)
            .map(|n| WellId::new(format!("{id}-w{n}")))
            .find(|w| !index.wells.contains_key(w))
            .expect("unbounded"),
    };
    let cfg = WellConfig {
        well_id: well_id.clone(),
        kind: req.kind,
        prompt_description: req.prompt_description,
        parameters: req.parameters,
        active: req.active,
    };
    st.orch.registry().validate(&cfg)?;
    index.wells.insert(well_id.clone(), id);
    drop(index);
    s.well_configs.push(cfg.clone());
    s.document.touch();
    s.record(
        Actor::User,
        "addWell",
        json!({"wellId": well_id, "kind": cfg.kind}),
    );
    st.persist(&s);
    Ok((StatusCode::CREATED, Json(cfg)))
}

/// Present-but-null deserializes to `Some(None)`.
fn present<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<Option<T>, D::Error> {
    T::deserialize(d).map(Some)
}

#[derive(Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct WellPatch {
    #[serde(default, deserialize_with = "present", skip_serializing_if = "Option::is_none")]
    prompt_description: Option<Option<String>>,
    /// Merged into the existing parameters; a null value removes the key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parameters: Option<BTreeMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    active: Option<bool>,
}

async fn patch_well(
    State(st): St,
    UrlPath(id): UrlPath<WellId>,
    req: Result<Json<WellPatch>, JsonRejection>,
) -> ApiResult<Json<WellConfig>> {
    let req = body(req)?;
    let doc_id = st.index.lock().unwrap().wells.get(&id).cloned();
    let doc = st.doc(&doc_id.ok_or_else(|| ApiError::not_found("UnknownWell", id.as_str()))?)?;
    let mut s = doc.lock().unwrap();
    let pos = s
        .well_configs
        .iter()
        .position(|w| w.well_id == id)
        .ok_or_else(|| ApiError::not_found("UnknownWell", id.as_str()))?;
    let mut cfg = s.well_configs[pos].clone();
    if let Some(d) = &req.prompt_description {
        cfg.prompt_description = d.clone();
    }
    if let Some(params) = &req.parameters {
        for (k, v) in params {
            if v.is_null() {
                cfg.parameters.remove(k);
            } else {
                cfg.parameters.insert(k.clone(), v.clone());
            }
        }
    }
    if let Some(a) = req.active {
        cfg.active = a;
    }
    st.orch.registry().validate(&cfg)?;
    s.well_configs[pos] = cfg.clone();
    s.document.touch();
    s.record(
        Actor::User,
        "updateWell",
        json!({"wellId": id, "patch": serde_json::to_value(&req).expect("patch serializes")}),
    );
    st.persist(&s);
    Ok(Json(cfg))
}

#[derive(Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RunRequest {
    /// Selects the inlet's active wells before running.
    well_ids: Option<BTreeSet<WellId>>,
    /// Explicitly run every active well; the default.
    all: Option<bool>,
    /// Re-runs one well inside the current generation's job.
    rerun: Option<WellId>,
    seed: Option<u64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RunStarted {
    job_id: String,
    generation: u64,
}

async fn run(
    State(st): St,
    UrlPath((doc_id, inlet)): UrlPath<(String, InletId)>,
    req: Option<Json<Value>>,
) -> ApiResult<impl IntoResponse> {
    let req: RunRequest = match req {
        Some(Json(v)) => serde_json::from_value(v).map_err(|e| ApiError::bad("InvalidBody", e.to_string()))?,
        None => RunRequest::default(),
    };
    if req.rerun.is_some() && (req.well_ids.is_some() || req.all == Some(true)) {
        return Err(ApiError::bad("InvalidBody", "rerun cannot be combined with wellIds or all"));
    }
    let doc = st.doc(&doc_id)?;
    let mut guard = doc.lock().unwrap();
    let s = &mut *guard;
    s.document.inlet(&inlet)?;
    let mut document = s.document.clone();
    if let Some(ids) = &req.well_ids {
        check_wells(s, ids)?;
        document.set_active_wells(&inlet, ids.clone())?;
    }
    let target = match &req.rerun {
        Some(w) => RunTarget::Single(w.clone()),
        None => RunTarget::All,
    };
    let job_id = st.orch.run_wells(&mut document, &inlet, &s.well_configs, target, req.seed)?;
    document.touch();
    s.document = document;
    let snap = st.orch.snapshot(&job_id, 0)?;
    s.constraints = snap.constraints.clone();
    {
        let mut index = st.index.lock().unwrap();
        index.jobs.insert(job_id.clone(), doc_id);
        let jobs = index.inlet_jobs.entry(inlet.clone()).or_default();
        if jobs.last() != Some(&job_id) {
            jobs.push(job_id.clone());
        }
    }
    s.record(
        Actor::User,
        "runWells",
        json!({
            "inletId": inlet,
            "jobId": job_id,
            "generation": snap.generation,
            "wellIds": req.well_ids,
            "rerun": req.rerun,
            "seed": req.seed,
        }),
    );
    st.persist(s);
    Ok((
        StatusCode::ACCEPTED,
        Json(RunStarted {
            job_id,
            generation: snap.generation,
        }),
    ))
}

#[derive(Deserialize)]
struct JobQuery {
    #[serde(default)]
    cursor: usize,
}

async fn job(State(st): St, UrlPath(id): UrlPath<String>, Query(q): Query<JobQuery>) -> ApiResult<Response> {
    let snap = st.orch.snapshot(&id, q.cursor)?;
    if snap.complete && !snap.rephrasings.is_empty() {
        let doc_id = st.index.lock().unwrap().jobs.get(&id).cloned();
        if let Some(doc) = doc_id.and_then(|d| st.doc(&d).ok()) {
            let mut s = doc.lock().unwrap();
            let seen = s.history.iter().any(|h| h.job_id == id && h.cursor == snap.cursor);
            if !seen {
                s.history.push(HistoryEntry {
                    inlet_id: snap.inlet_id.clone(),
                    job_id: id.clone(),
                    generation: snap.generation,
                    cursor: snap.cursor,
                    rephrasings: snap.rephrasings.clone(),
                });
                s.record(
                    Actor::System,
                    "poolSnapshot",
                    json!({"jobId": id, "cursor": snap.cursor}),
                );
                st.persist(&s);
            }
        }
    }
    Ok(Json(snap).into_response())
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct AcceptRequest {
    rephrasing_id: String,
}

async fn accept(
    State(st): St,
    UrlPath(inlet): UrlPath<InletId>,
    req: Result<Json<AcceptRequest>, JsonRejection>,
) -> ApiResult<Json<Document>> {
    let req = body(req)?;
    let doc = st.doc_of_inlet(&inlet)?;
    let mut s = doc.lock().unwrap();
    let jobs = st.index.lock().unwrap().inlet_jobs.get(&inlet).cloned().unwrap_or_default();
    let live = jobs.iter().rev().find_map(|j| {
        let snap = st.orch.snapshot(j, usize::MAX).ok()?;
        snap.rephrasings.into_iter().find(|r| r.id == req.rephrasing_id)
    });
    let found = live.or_else(|| {
        s.history
            .iter()
            .rev()
            .filter(|h| h.inlet_id == inlet)
            .find_map(|h| h.rephrasings.iter().find(|r| r.id == req.rephrasing_id).cloned())
    });
    let r = found.ok_or_else(|| ApiError::not_found("UnknownRephrasing", &req.rephrasing_id))?;
    s.document.accept_rephrasing(&inlet, &r)?;
    st.orch.sync_document(&s.document);
    s.record(
        Actor::User,
        "accept",
        json!({"inletId": inlet, "rephrasingId": r.id, "text": r.text, "wellId": r.well_id}),
    );
    st.persist(&s);
    Ok(Json(s.document.clone()))
}

async fn get_session(State(st): St, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Session>> {
    Ok(Json(st.doc(&id)?.lock().unwrap().clone()))
}

async fn put_session(
    State(st): St,
    UrlPath(id): UrlPath<String>,
    req: Result<Json<Value>, JsonRejection>,
) -> ApiResult<Json<Session>> {
    if !valid_id(&id) {
        return Err(ApiError::bad("InvalidId", format!("bad document id {id:?}")));
    }
    let mut s = Session::from_value(body(req)?)?;
    if s.document.id.is_empty() {
        s.document.id = id.clone();
    } else if s.document.id != id {
        return Err(ApiError::bad(
            "IdMismatch",
            format!("session is for document {}, not {id}", s.document.id),
        ));
    }
    let mut seen = BTreeSet::new();
    for w in &s.well_configs {
        if !valid_id(w.well_id.as_str()) || !seen.insert(&w.well_id) {
            return Err(ApiError::bad("InvalidId", format!("bad or repeated well id {}", w.well_id)));
        }
        st.orch.registry().validate(w)?;
    }
    if let Some(clash) = st.index.lock().unwrap().clash(&s) {
        return Err(ApiError::bad("DuplicateId", format!("{clash} belongs to another document")));
    }
    s.record(Actor::User, "loadSession", json!({"documentId": id}));
    st.persist(&s);
    st.install(s.clone());
    Ok(Json(s))
}

pub async fn serve(state: Arc<AppState>, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
