//! HTTP session service.
//!
//! Each session owns one project document behind a fair read/write lock:
//! edits queue up one at a time in arrival order while reads run
//! concurrently. Every edit goes through [`Session::apply`], so the session
//! log always replays to the current document. Mesh previews can be slow
//! and run as background jobs that clients poll.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::RwLock;

use scaffold_core::config::{DEFAULT_CONE_EDGES, DEFAULT_DIRECTION_SAMPLES};
use scaffold_core::geometry::Pose;
use scaffold_core::grasp::{evaluate_grasp, ghost_pose, Contact, GraspQuality, GripperModel};
use scaffold_core::io::{load_project, parse_cloud, save_project, CloudFormat, EvaluationReport, ProjectDocument};
use scaffold_core::meshing::TriMesh;
use scaffold_core::session::{EditOp, ScaffoldOp, Session};
use scaffold_core::Error;

use crate::commands::{mesh_assembly, object_mesh, MeshKind};

/// Error body: the typed error name and a readable message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    pub message: String,
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self.error.as_str() {
            "NotFound" | "DanglingReference" => StatusCode::NOT_FOUND,
            "ParseError" | "SerializationError" | "UnsupportedFormat" | "VersionMismatch" => StatusCode::BAD_REQUEST,
            "IoError" | "Internal" => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    fn not_found(what: &str) -> Self {
        Self {
            error: "NotFound".into(),
            message: format!("no {what}"),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        Self {
            error: e.kind().into(),
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for ApiError {
    fn from(e: anyhow::Error) -> Self {
        Self {
            error: crate::commands::error_kind(&e).into(),
            message: format!("{e:#}"),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Triangle soup for previews: three corner positions per triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPreview {
    pub triangles: Vec<[[f64; 3]; 3]>,
    pub watertight: bool,
}

impl From<&TriMesh> for MeshPreview {
    fn from(m: &TriMesh) -> Self {
        let corner = |i: u32| {
            let v = m.vertices[i as usize];
            [v.x, v.y, v.z]
        };
        Self {
            triangles: m.triangles.iter().map(|t| t.map(corner)).collect(),
            watertight: m.is_watertight(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    Done { result: MeshPreview },
    Failed { error: ApiError },
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<RwLock<Session>>>>,
    jobs: Mutex<HashMap<String, JobStatus>>,
    next_id: AtomicU64,
}

impl AppState {
    fn fresh_id(&self, prefix: &str) -> String {
        format!("{prefix}{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1)
    }

    async fn session(&self, sid: &str) -> Result<Arc<RwLock<Session>>, ApiError> {
        self.sessions
            .read()
            .await
            .get(sid)
            .cloned()
            .ok_or_else(|| ApiError::not_found(&format!("session {sid:?}")))
    }

    /// Applies one edit under the session's write lock.
    async fn apply(&self, sid: &str, op: EditOp) -> Result<u64, ApiError> {
        let entry = self.session(sid).await?;
        let mut s = entry.write().await;
        s.apply(op)?;
        Ok(s.log().records.last().map_or(0, |r| r.seq))
    }

    async fn document(&self, sid: &str) -> Result<ProjectDocument, ApiError> {
        Ok(self.session(sid).await?.read().await.document().clone())
    }
}

pub type SharedState = Arc<AppState>;

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{sid}", get(get_document))
        .route("/sessions/{sid}/items", get(list_items))
        .route("/sessions/{sid}/log", get(get_log))
        .route("/sessions/{sid}/ops", post(post_op))
        .route("/sessions/{sid}/clouds", post(upload_cloud))
        .route("/sessions/{sid}/insert_obb", post(insert_obb))
        .route("/sessions/{sid}/insert_pov", post(insert_pov))
        .route("/sessions/{sid}/assemblies/{aid}/parts/{part}/{op}", post(scaffold_edit))
        .route("/sessions/{sid}/mesh_preview", post(mesh_preview))
        .route("/sessions/{sid}/grasp_eval", post(grasp_eval))
        .route("/sessions/{sid}/paths/{pid}/waypoints", post(record_waypoint))
        .route("/sessions/{sid}/save", post(save))
        .route("/jobs/{job}", get(get_job))
        .with_state(state)
}

pub async fn serve(host: &str, port: u16) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("session service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(SharedState::default())).await?;
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub document: Option<ProjectDocument>,
    /// Project file on the server's disk.
    #[serde(default)]
    pub path: Option<String>,
}

async fn create_session(State(st): State<SharedState>, body: Option<Json<CreateSession>>) -> ApiResult<Value> {
    let req = body.map(|b| b.0).unwrap_or_default();
    let doc = match (req.document, req.path) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument("give either a document or a path, not both".into()).into())
        }
        (Some(d), None) => d,
        (None, Some(p)) => load_project(std::path::Path::new(&p))?,
        (None, None) => ProjectDocument::new(req.name.unwrap_or_default()),
    };
    let session = Session::new(doc)?;
    let document = session.document().clone();
    let sid = st.fresh_id("s");
    st.sessions
        .write()
        .await
        .insert(sid.clone(), Arc::new(RwLock::new(session)));
    Ok(Json(json!({ "session": sid, "document": document })))
}

async fn list_sessions(State(st): State<SharedState>) -> Json<Vec<String>> {
    let mut ids: Vec<String> = st.sessions.read().await.keys().cloned().collect();
    ids.sort();
    Json(ids)
}

async fn get_document(State(st): State<SharedState>, Path(sid): Path<String>) -> ApiResult<ProjectDocument> {
    Ok(Json(st.document(&sid).await?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSummary {
    pub id: String,
    pub kind: String,
    pub visible: bool,
    pub locked: bool,
    /// Points for clouds, parts for assemblies, poses for paths.
    pub size: usize,
}

async fn list_items(State(st): State<SharedState>, Path(sid): Path<String>) -> ApiResult<Vec<ItemSummary>> {
    let entry = st.session(&sid).await?;
    let s = entry.read().await;
    let d = s.document();
    let item = |id: &str, kind: &str, f: scaffold_core::io::ItemFlags, size| ItemSummary {
        id: id.into(),
        kind: kind.into(),
        visible: f.visible,
        locked: f.locked,
        size,
    };
    let mut out = Vec::new();
    out.extend(d.clouds.iter().map(|c| item(&c.id, "cloud", c.flags, c.cloud.len())));
    out.extend(d.assemblies.iter().map(|a| item(&a.id, "assembly", a.flags, a.assembly.parts.len())));
    out.extend(d.grasps.iter().map(|g| item(&g.annotation.id, "grasp", g.flags, 1)));
    out.extend(d.paths.iter().map(|p| item(&p.path.id, "path", p.flags, p.path.poses.len())));
    out.extend(d.reports.iter().map(|r| item(r.id(), "report", Default::default(), 1)));
    Ok(Json(out))
}

async fn get_log(State(st): State<SharedState>, Path(sid): Path<String>) -> ApiResult<Value> {
    let entry = st.session(&sid).await?;
    let s = entry.read().await;
    Ok(Json(json!({
        "records": s.log().records,
        "modeling_duration": s.log().modeling_duration(),
    })))
}

async fn post_op(State(st): State<SharedState>, Path(sid): Path<String>, Json(op): Json<EditOp>) -> ApiResult<Value> {
    let name = op.name();
    let seq = st.apply(&sid, op).await?;
    Ok(Json(json!({ "seq": seq, "op": name })))
}

/// Builds a tagged op from an untagged request body.
fn tagged<T: serde::de::DeserializeOwned>(mut body: Value, fields: &[(&str, Value)]) -> Result<T, ApiError> {
    let obj = body
        .as_object_mut()
        .ok_or_else(|| Error::InvalidArgument("request body must be a JSON object".into()))?;
    for (k, v) in fields {
        obj.insert((*k).into(), v.clone());
    }
    serde_json::from_value(body).map_err(|e| Error::from(e).into())
}

#[derive(Debug, Deserialize)]
pub struct CloudUpload {
    pub id: String,
    pub format: CloudFormat,
    pub text: String,
}

async fn upload_cloud(
    State(st): State<SharedState>,
    Path(sid): Path<String>,
    Json(up): Json<CloudUpload>,
) -> ApiResult<Value> {
    let load = parse_cloud(&up.text, up.format)?;
    let points = load.cloud.len();
    let seq = st
        .apply(
            &sid,
            EditOp::AddCloud {
                id: up.id,
                cloud: load.cloud,
            },
        )
        .await?;
    Ok(Json(json!({ "seq": seq, "points": points, "dropped": load.dropped })))
}

async fn insert_with(st: &AppState, sid: &str, op: &str, body: Value) -> ApiResult<Value> {
    let op: EditOp = tagged(body, &[("op", json!(op))])?;
    let id = match &op {
        EditOp::InsertObb { id, .. } | EditOp::InsertPov { id, .. } => id.clone(),
        _ => unreachable!("tag fixed above"),
    };
    let seq = st.apply(sid, op).await?;
    let doc = st.document(sid).await?;
    let assembly = doc.assembly(&id).map(|a| a.assembly.clone());
    Ok(Json(json!({ "seq": seq, "id": id, "assembly": assembly })))
}

async fn insert_obb(State(st): State<SharedState>, Path(sid): Path<String>, Json(body): Json<Value>) -> ApiResult<Value> {
    insert_with(&st, &sid, "insert_obb", body).await
}

async fn insert_pov(State(st): State<SharedState>, Path(sid): Path<String>, Json(body): Json<Value>) -> ApiResult<Value> {
    insert_with(&st, &sid, "insert_pov", body).await
}

async fn scaffold_edit(
    State(st): State<SharedState>,
    Path((sid, aid, part, op)): Path<(String, String, usize, String)>,
    body: Option<Json<Value>>,
) -> ApiResult<Value> {
    if !ScaffoldOp::NAMES.contains(&op.as_str()) {
        return Err(ApiError::not_found(&format!("scaffold operation {op:?}")));
    }
    let body = body.map(|b| b.0).unwrap_or_else(|| json!({}));
    let edit: ScaffoldOp = tagged(body, &[("edit", json!(op))])?;
    let seq = st
        .apply(
            &sid,
            EditOp::EditScaffold {
                assembly: aid.clone(),
                part,
                edit,
            },
        )
        .await?;
    let doc = st.document(&sid).await?;
    let scaffold = doc.assembly(&aid).and_then(|a| a.assembly.parts.get(part).cloned());
    Ok(Json(json!({ "seq": seq, "scaffold": scaffold })))
}

fn default_samples() -> usize {
    16
}

#[derive(Debug, Deserialize)]
pub struct MeshRequest {
    pub assembly: String,
    /// One part only; the whole assembly when absent.
    #[serde(default)]
    pub part: Option<usize>,
    pub kind: MeshKind,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

async fn mesh_preview(
    State(st): State<SharedState>,
    Path(sid): Path<String>,
    Json(req): Json<MeshRequest>,
) -> ApiResult<Value> {
    let doc = st.document(&sid).await?;
    let a = doc
        .assembly(&req.assembly)
        .ok_or_else(|| ApiError::not_found(&format!("assembly {:?}", req.assembly)))?;
    let mut assembly = a.assembly.clone();
    if let Some(p) = req.part {
        let len = assembly.parts.len();
        let part = assembly
            .parts
            .get(p)
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("part {p} out of range for {len} parts")))?;
        assembly.parts = vec![part];
    }
    let job = st.fresh_id("j");
    st.jobs.lock().unwrap().insert(job.clone(), JobStatus::Pending);
    let state = st.clone();
    let key = job.clone();
    tokio::task::spawn_blocking(move || {
        let status = match mesh_assembly(&assembly, req.kind, req.samples) {
            Ok(m) => JobStatus::Done {
                result: MeshPreview::from(&m),
            },
            Err(e) => JobStatus::Failed { error: e.into() },
        };
        state.jobs.lock().unwrap().insert(key, status);
    });
    Ok(Json(json!({ "job": job })))
}

async fn get_job(State(st): State<SharedState>, Path(job): Path<String>) -> ApiResult<JobStatus> {
    st.jobs
        .lock()
        .unwrap()
        .get(&job)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(&format!("job {job:?}")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspEvalRequest {
    /// A stored grasp annotation...
    #[serde(default)]
    pub grasp: Option<String>,
    /// ...or an object id with a world gripper pose.
    #[serde(default)]
    pub object: Option<String>,
    #[serde(default)]
    pub pose: Option<Pose>,
    #[serde(default)]
    pub gripper: Option<GripperModel>,
    #[serde(default)]
    pub cone_edges: Option<usize>,
    #[serde(default)]
    pub directions: Option<usize>,
    #[serde(default = "default_samples")]
    pub mesh_samples: usize,
    /// Store the result as a report with this id.
    #[serde(default)]
    pub report_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspEvalResponse {
    pub contacts: Vec<Contact>,
    pub quality: GraspQuality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
}

async fn grasp_eval(
    State(st): State<SharedState>,
    Path(sid): Path<String>,
    Json(req): Json<GraspEvalRequest>,
) -> ApiResult<GraspEvalResponse> {
    let doc = st.document(&sid).await?;
    let gripper = req.gripper.unwrap_or_else(GripperModel::pr2);
    gripper.validate()?;
    let cone_edges = req.cone_edges.unwrap_or(DEFAULT_CONE_EDGES);
    let directions = req.directions.unwrap_or(DEFAULT_DIRECTION_SAMPLES);
    let samples = req.mesh_samples;
    let grasp_id = req.grasp.clone();
    let (contacts, quality) = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        let (object, pose) = match (&req.grasp, &req.object, req.pose) {
            (Some(g), None, None) => {
                let g = doc
                    .grasp(g)
                    .ok_or_else(|| ApiError::not_found(&format!("grasp {g:?}")))?;
                (g.annotation.object.clone(), None)
            }
            (None, Some(o), Some(p)) => (o.clone(), Some(p)),
            _ => {
                return Err(Error::InvalidArgument("give either grasp, or object and pose".into()).into());
            }
        };
        let (mesh, base) = object_mesh(&doc, &object, samples)?;
        let pose = match pose {
            Some(p) => p,
            None => {
                let g = doc.grasp(req.grasp.as_deref().unwrap_or_default()).expect("checked above");
                g.annotation.world_poses(base)?.0
            }
        };
        Ok(evaluate_grasp(&gripper, &pose, &mesh, cone_edges, directions)?)
    })
    .await
    .map_err(|e| ApiError {
        error: "Internal".into(),
        message: e.to_string(),
    })??;
    let seq = match req.report_id {
        Some(id) => Some(
            st.apply(
                &sid,
                EditOp::AddReport {
                    report: EvaluationReport::GraspQuality {
                        id,
                        grasp: grasp_id.unwrap_or_default(),
                        quality: quality.clone(),
                    },
                },
            )
            .await?,
        ),
        None => None,
    };
    Ok(Json(GraspEvalResponse { contacts, quality, seq }))
}

#[derive(Debug, Deserialize)]
pub struct WaypointRequest {
    pub pose: Pose,
}

async fn record_waypoint(
    State(st): State<SharedState>,
    Path((sid, pid)): Path<(String, String)>,
    Json(req): Json<WaypointRequest>,
) -> ApiResult<Value> {
    let seq = st
        .apply(
            &sid,
            EditOp::RecordWaypoint {
                path: pid.clone(),
                pose: req.pose,
            },
        )
        .await?;
    let doc = st.document(&sid).await?;
    let path = &doc.path(&pid).expect("recorded above").path;
    let ghost = ghost_pose(path, path.poses.len() - 1)?;
    Ok(Json(json!({ "seq": seq, "length": path.poses.len(), "ghost": ghost })))
}

#[derive(Debug, Deserialize)]
pub struct SaveRequest {
    pub path: String,
    /// Also write the session log here.
    #[serde(default)]
    pub log: Option<String>,
}

async fn save(State(st): State<SharedState>, Path(sid): Path<String>, Json(req): Json<SaveRequest>) -> ApiResult<Value> {
    let entry = st.session(&sid).await?;
    let s = entry.read().await;
    save_project(s.document(), std::path::Path::new(&req.path))?;
    if let Some(log) = &req.log {
        let text = serde_json::to_string_pretty(s.log()).map_err(Error::from)?;
        std::fs::write(log, text).map_err(Error::from)?;
    }
    Ok(Json(json!({ "path": req.path, "log": req.log })))
}
