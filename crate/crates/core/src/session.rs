//! Logged editing of a project document.
//!
//! Every change to a document goes through [`EditOp`]. A [`Session`] applies
//! ops one at a time and records each successful one with its start time and
//! duration, so replaying the log on the initial document rebuilds the final
//! one exactly.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, SlicePlane, Vec2, Vec3};
use crate::grasp::{AnnotationLabels, GraspAnnotation, WaypointPath};
use crate::io::{
    paint_cloud, select_points, AssemblyItem, Camera, CloudItem, EvaluationReport, GraspItem, ItemFlags, PathItem,
    ProjectDocument,
};
use crate::metrics::prototype_scaffold;
use crate::scaffold::{
    add_hole, apply_pattern, copy_handles, delete_slice, insert_scaffold_obb, insert_scaffold_pov, insert_slice,
    move_handle, permute_sweep_axis, reverse_sweep, scale_hole, set_slice_spacing_scale, set_sweep_axis_2d,
    shrink_wrap, transform_scaffold, transform_slice, HandleKind, PartAssembly, Pattern, PointCloud, Primitive,
    Scaffold, SliceTransform,
};

/// Edit of one scaffold part. Each variant maps onto one scaffold operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "edit", rename_all = "snake_case")]
pub enum ScaffoldOp {
    PermuteSweepAxis { axis_index: usize },
    ShrinkWrap { slices: Vec<usize> },
    ReverseSweep,
    TransformSlice { slice: usize, delta: SliceTransform },
    TransformScaffold { delta: Pose, scale: f64 },
    SetSliceSpacingScale { factor: f64 },
    InsertSlice { at: f64 },
    DeleteSlice { slice: usize },
    MoveHandle { slice: usize, kind: HandleKind, handle: usize, position: Vec2 },
    ApplyPattern { slice: usize, kind: HandleKind, pattern: Pattern },
    CopyHandles { from: usize, to: usize, kind: HandleKind },
    AddHole { slices: Vec<usize>, handles: usize, fraction: f64 },
    ScaleHole { slice: usize, factor: f64 },
    #[serde(rename = "set_sweep_axis_2d")]
    SetSweepAxis2d { plane: SlicePlane, polyline: Vec<Vec2> },
}

impl ScaffoldOp {
    pub fn name(&self) -> &'static str {
        match self {
            ScaffoldOp::PermuteSweepAxis { .. } => "permute_sweep_axis",
            ScaffoldOp::ShrinkWrap { .. } => "shrink_wrap",
            ScaffoldOp::ReverseSweep => "reverse_sweep",
            ScaffoldOp::TransformSlice { .. } => "transform_slice",
            ScaffoldOp::TransformScaffold { .. } => "transform_scaffold",
            ScaffoldOp::SetSliceSpacingScale { .. } => "set_slice_spacing_scale",
            ScaffoldOp::InsertSlice { .. } => "insert_slice",
            ScaffoldOp::DeleteSlice { .. } => "delete_slice",
            ScaffoldOp::MoveHandle { .. } => "move_handle",
            ScaffoldOp::ApplyPattern { .. } => "apply_pattern",
            ScaffoldOp::CopyHandles { .. } => "copy_handles",
            ScaffoldOp::AddHole { .. } => "add_hole",
            ScaffoldOp::ScaleHole { .. } => "scale_hole",
            ScaffoldOp::SetSweepAxis2d { .. } => "set_sweep_axis_2d",
        }
    }

    /// Operation names, for routing.
    pub const NAMES: [&'static str; 14] = [
        "permute_sweep_axis",
        "shrink_wrap",
        "reverse_sweep",
        "transform_slice",
        "transform_scaffold",
        "set_slice_spacing_scale",
        "insert_slice",
        "delete_slice",
        "move_handle",
        "apply_pattern",
        "copy_handles",
        "add_hole",
        "scale_hole",
        "set_sweep_axis_2d",
    ];

    /// Shrink-wrap and axis permutation need the cloud the part was fitted to.
    pub fn apply(&self, s: &Scaffold, cloud: Option<&PointCloud>) -> Result<Scaffold> {
        let need_cloud = || {
            cloud.ok_or_else(|| Error::DanglingReference(format!("part {:?} has no source cloud", s.name)))
        };
        match self {
            ScaffoldOp::PermuteSweepAxis { axis_index } => permute_sweep_axis(s, need_cloud()?, *axis_index),
            ScaffoldOp::ShrinkWrap { slices } => Ok(shrink_wrap(s, need_cloud()?, slices)?.scaffold),
            ScaffoldOp::ReverseSweep => Ok(reverse_sweep(s)),
            ScaffoldOp::TransformSlice { slice, delta } => transform_slice(s, *slice, delta),
            ScaffoldOp::TransformScaffold { delta, scale } => transform_scaffold(s, delta, *scale),
            ScaffoldOp::SetSliceSpacingScale { factor } => set_slice_spacing_scale(s, *factor),
            ScaffoldOp::InsertSlice { at } => insert_slice(s, *at),
            ScaffoldOp::DeleteSlice { slice } => delete_slice(s, *slice),
            ScaffoldOp::MoveHandle {
                slice,
                kind,
                handle,
                position,
            } => move_handle(s, *slice, *kind, *handle, *position),
            ScaffoldOp::ApplyPattern { slice, kind, pattern } => apply_pattern(s, *slice, *kind, pattern),
            ScaffoldOp::CopyHandles { from, to, kind } => copy_handles(s, *from, *to, *kind),
            ScaffoldOp::AddHole {
                slices,
                handles,
                fraction,
            } => add_hole(s, slices, *handles, *fraction),
            ScaffoldOp::ScaleHole { slice, factor } => scale_hole(s, *slice, *factor),
            ScaffoldOp::SetSweepAxis2d { plane, polyline } => set_sweep_axis_2d(s, plane, polyline),
        }
    }
}

/// One change to a project document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    AddCloud {
        id: String,
        cloud: PointCloud,
    },
    /// Moves the points inside a screen polygon into a new cloud.
    SplitCloud {
        cloud: String,
        new_id: String,
        polygon: Vec<Vec2>,
        camera: Camera,
    },
    PaintCloud {
        cloud: String,
        color: [u8; 3],
    },
    SetFlags {
        id: String,
        flags: ItemFlags,
    },
    InsertObb {
        id: String,
        cloud: String,
        primitive: Primitive,
        slices: usize,
        handles: usize,
        tension: f64,
    },
    InsertPov {
        id: String,
        cloud: String,
        view_direction: Vec3,
        primitive: Primitive,
        slices: usize,
        handles: usize,
        tension: f64,
    },
    /// Appends a part to an existing assembly.
    AddPart {
        assembly: String,
        part: Scaffold,
    },
    EditScaffold {
        assembly: String,
        part: usize,
        #[serde(flatten)]
        edit: ScaffoldOp,
    },
    MergePrototype {
        id: String,
        sources: Vec<String>,
        slices: usize,
        handles: usize,
        #[serde(default)]
        allow_scale: bool,
    },
    RemoveItem {
        id: String,
    },
    AddGrasp {
        annotation: GraspAnnotation,
    },
    SetGraspLabels {
        grasp: String,
        labels: AnnotationLabels,
    },
    CreatePath {
        id: String,
        object: String,
        pre_grasp: Pose,
        grasp: Pose,
        object_pose: Pose,
    },
    RecordWaypoint {
        path: String,
        pose: Pose,
    },
    AddReport {
        report: EvaluationReport,
    },
}

impl EditOp {
    pub fn name(&self) -> &'static str {
        match self {
            EditOp::AddCloud { .. } => "add_cloud",
            EditOp::SplitCloud { .. } => "split_cloud",
            EditOp::PaintCloud { .. } => "paint_cloud",
            EditOp::SetFlags { .. } => "set_flags",
            EditOp::InsertObb { .. } => "insert_obb",
            EditOp::InsertPov { .. } => "insert_pov",
            EditOp::AddPart { .. } => "add_part",
            EditOp::EditScaffold { edit, .. } => edit.name(),
            EditOp::MergePrototype { .. } => "merge_prototype",
            EditOp::RemoveItem { .. } => "remove_item",
            EditOp::AddGrasp { .. } => "add_grasp",
            EditOp::SetGraspLabels { .. } => "set_grasp_labels",
            EditOp::CreatePath { .. } => "create_path",
            EditOp::RecordWaypoint { .. } => "record_waypoint",
            EditOp::AddReport { .. } => "add_report",
        }
    }

    /// Returns the edited document; `doc` itself is never modified, so a
    /// failed op leaves no trace.
    pub fn apply(&self, doc: &ProjectDocument) -> Result<ProjectDocument> {
        let mut out = doc.clone();
        self.apply_in_place(&mut out)?;
        out.validate()?;
        Ok(out)
    }

    fn apply_in_place(&self, doc: &mut ProjectDocument) -> Result<()> {
        match self {
            EditOp::AddCloud { id, cloud } => {
                let mut cloud = cloud.clone();
                cloud.name = Some(id.clone());
                doc.clouds.push(CloudItem {
                    id: id.clone(),
                    cloud,
                    flags: ItemFlags::default(),
                });
            }
            EditOp::SplitCloud {
                cloud,
                new_id,
                polygon,
                camera,
            } => {
                let item = cloud_mut(doc, cloud)?;
                unlocked(item.flags, cloud)?;
                let (mut selected, rest) = select_points(&item.cloud, polygon, camera)?;
                item.cloud = rest;
                selected.name = Some(new_id.clone());
                doc.clouds.push(CloudItem {
                    id: new_id.clone(),
                    cloud: selected,
                    flags: ItemFlags::default(),
                });
            }
            EditOp::PaintCloud { cloud, color } => {
                let item = cloud_mut(doc, cloud)?;
                unlocked(item.flags, cloud)?;
                item.cloud = paint_cloud(&item.cloud, *color);
            }
            EditOp::SetFlags { id, flags } => *flags_mut(doc, id)? = *flags,
            EditOp::InsertObb {
                id,
                cloud,
                primitive,
                slices,
                handles,
                tension,
            } => {
                let c = &cloud_ref(doc, cloud)?.cloud;
                let s = named(insert_scaffold_obb(c, *primitive, *slices, *handles, *tension)?, id, cloud);
                push_assembly(doc, id, cloud, s);
            }
            EditOp::InsertPov {
                id,
                cloud,
                view_direction,
                primitive,
                slices,
                handles,
                tension,
            } => {
                let c = &cloud_ref(doc, cloud)?.cloud;
                let s = named(
                    insert_scaffold_pov(c, *view_direction, *primitive, *slices, *handles, *tension)?,
                    id,
                    cloud,
                );
                push_assembly(doc, id, cloud, s);
            }
            EditOp::AddPart { assembly, part } => {
                part.validate()?;
                let a = assembly_mut(doc, assembly)?;
                unlocked(a.flags, assembly)?;
                if a.assembly.parts.iter().any(|p| p.name == part.name) {
                    return Err(Error::InvalidArgument(format!(
                        "assembly {assembly:?} already has a part named {:?}",
                        part.name
                    )));
                }
                a.assembly.parts.push(part.clone());
            }
            EditOp::EditScaffold { assembly, part, edit } => {
                let a = doc
                    .assembly(assembly)
                    .ok_or_else(|| missing("assembly", assembly))?;
                unlocked(a.flags, assembly)?;
                let len = a.assembly.parts.len();
                let s = a.assembly.parts.get(*part).ok_or(Error::index("part", *part, len))?;
                let cloud_id = s.source_cloud.as_ref().or(a.cloud.as_ref());
                let cloud = cloud_id.and_then(|c| doc.cloud(c)).map(|c| &c.cloud);
                let edited = edit.apply(s, cloud)?;
                assembly_mut(doc, assembly)?.assembly.parts[*part] = edited;
            }
            EditOp::MergePrototype {
                id,
                sources,
                slices,
                handles,
                allow_scale,
            } => {
                let parts = sources
                    .iter()
                    .map(|sid| {
                        doc.object_scaffold(sid)
                            .cloned()
                            .ok_or_else(|| missing("scaffold", sid))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut proto = prototype_scaffold(&parts, *slices, *handles, *allow_scale)?;
                proto.name = id.clone();
                proto.source_cloud = None;
                doc.assemblies.push(AssemblyItem {
                    id: id.clone(),
                    cloud: None,
                    assembly: PartAssembly::single(proto),
                    flags: ItemFlags::default(),
                });
            }
            EditOp::RemoveItem { id } => {
                unlocked(*flags_mut(doc, id)?, id)?;
                doc.clouds.retain(|c| c.id != *id);
                doc.assemblies.retain(|a| a.id != *id);
                doc.grasps.retain(|g| g.annotation.id != *id);
                doc.paths.retain(|p| p.path.id != *id);
                doc.reports.retain(|r| r.id() != id);
            }
            EditOp::AddGrasp { annotation } => doc.grasps.push(GraspItem {
                annotation: annotation.clone(),
                flags: ItemFlags::default(),
            }),
            EditOp::SetGraspLabels { grasp, labels } => {
                let g = doc
                    .grasps
                    .iter_mut()
                    .find(|g| g.annotation.id == *grasp)
                    .ok_or_else(|| missing("grasp", grasp))?;
                unlocked(g.flags, grasp)?;
                g.annotation.labels = labels.clone();
            }
            EditOp::CreatePath {
                id,
                object,
                pre_grasp,
                grasp,
                object_pose,
            } => doc.paths.push(PathItem {
                path: WaypointPath::new(id.clone(), object.clone(), *pre_grasp, *grasp, *object_pose),
                flags: ItemFlags::default(),
            }),
            EditOp::RecordWaypoint { path, pose } => {
                let p = doc
                    .paths
                    .iter_mut()
                    .find(|p| p.path.id == *path)
                    .ok_or_else(|| missing("path", path))?;
                unlocked(p.flags, path)?;
                if p.path.timestamps.is_some() {
                    return Err(Error::InvalidOperation(format!(
                        "path {path:?} carries timestamps; record with a timestamp"
                    )));
                }
                p.path.record(*pose);
            }
            EditOp::AddReport { report } => doc.reports.push(report.clone()),
        }
        Ok(())
    }
}

fn missing(what: &str, id: &str) -> Error {
    Error::DanglingReference(format!("no {what} with id {id:?}"))
}

fn unlocked(flags: ItemFlags, id: &str) -> Result<()> {
    if flags.locked {
        Err(Error::InvalidOperation(format!("{id:?} is locked")))
    } else {
        Ok(())
    }
}

fn cloud_ref<'a>(doc: &'a ProjectDocument, id: &str) -> Result<&'a CloudItem> {
    doc.cloud(id).ok_or_else(|| missing("cloud", id))
}

fn cloud_mut<'a>(doc: &'a mut ProjectDocument, id: &str) -> Result<&'a mut CloudItem> {
    doc.clouds.iter_mut().find(|c| c.id == id).ok_or_else(|| missing("cloud", id))
}

fn assembly_mut<'a>(doc: &'a mut ProjectDocument, id: &str) -> Result<&'a mut AssemblyItem> {
    doc.assembly_mut(id).ok_or_else(|| missing("assembly", id))
}

fn flags_mut<'a>(doc: &'a mut ProjectDocument, id: &str) -> Result<&'a mut ItemFlags> {
    if let Some(c) = doc.clouds.iter_mut().find(|c| c.id == id) {
        return Ok(&mut c.flags);
    }
    if let Some(a) = doc.assemblies.iter_mut().find(|a| a.id == id) {
        return Ok(&mut a.flags);
    }
    if let Some(g) = doc.grasps.iter_mut().find(|g| g.annotation.id == id) {
        return Ok(&mut g.flags);
    }
    if let Some(p) = doc.paths.iter_mut().find(|p| p.path.id == id) {
        return Ok(&mut p.flags);
    }
    Err(missing("item", id))
}

fn named(mut s: Scaffold, id: &str, cloud: &str) -> Scaffold {
    s.name = id.to_string();
    s.source_cloud = Some(cloud.to_string());
    s
}

fn push_assembly(doc: &mut ProjectDocument, id: &str, cloud: &str, s: Scaffold) {
    doc.assemblies.push(AssemblyItem {
        id: id.to_string(),
        cloud: Some(cloud.to_string()),
        assembly: PartAssembly::single(s),
        flags: ItemFlags::default(),
    });
}

/// One applied op: seconds since the session started, and how long it took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub seq: u64,
    pub timestamp: f64,
    pub duration: f64,
    pub op: EditOp,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub records: Vec<ActionRecord>,
}

impl SessionLog {
    /// Appends a record; timestamps must not go backwards.
    pub fn push(&mut self, timestamp: f64, duration: f64, op: EditOp) -> Result<()> {
        if !(timestamp.is_finite() && duration.is_finite() && duration >= 0.0) {
            return Err(Error::InvalidArgument("timestamp and duration must be finite".into()));
        }
        if let Some(last) = self.records.last() {
            if timestamp < last.timestamp {
                return Err(Error::InvalidArgument(format!(
                    "timestamp {timestamp} precedes {}",
                    last.timestamp
                )));
            }
        }
        self.records.push(ActionRecord {
            seq: self.records.len() as u64,
            timestamp,
            duration,
            op,
        });
        Ok(())
    }

    pub fn is_monotonic(&self) -> bool {
        self.records.windows(2).all(|w| w[1].timestamp >= w[0].timestamp)
    }

    /// Seconds from the start of the first action to the end of the last:
    /// the modeling time of the task.
    pub fn modeling_duration(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.timestamp + b.duration - a.timestamp,
            _ => 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Applies every logged op in order.
pub fn replay(initial: &ProjectDocument, log: &SessionLog) -> Result<ProjectDocument> {
    log.records.iter().try_fold(initial.clone(), |doc, r| r.op.apply(&doc))
}

/// A document under edit together with its action log.
#[derive(Debug, Clone)]
pub struct Session {
    initial: ProjectDocument,
    document: ProjectDocument,
    log: SessionLog,
    started: Instant,
}

impl Session {
    pub fn new(document: ProjectDocument) -> Result<Self> {
        document.validate()?;
        Ok(Self {
            initial: document.clone(),
            document,
            log: SessionLog::default(),
            started: Instant::now(),
        })
    }

    pub fn document(&self) -> &ProjectDocument {
        &self.document
    }

    pub fn initial(&self) -> &ProjectDocument {
        &self.initial
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    /// Applies `op`, logging it on success with wall-clock timing.
    pub fn apply(&mut self, op: EditOp) -> Result<&ProjectDocument> {
        let t0 = Instant::now();
        self.document = op.apply(&self.document)?;
        let timestamp = t0.duration_since(self.started).as_secs_f64();
        let duration = t0.elapsed().as_secs_f64();
        self.log.push(timestamp, duration, op)?;
        Ok(&self.document)
    }
}
