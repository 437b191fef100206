//! Batch commands. Each one reads files, runs a core operation and returns
//! the text to write, so the binary and the tests share the same code path.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use scaffold_core::config::DEFAULT_TENSION;
use scaffold_core::grasp::{evaluate_grasp, path_ribbon_area, GraspQuality, GripperModel, WaypointPath};
use scaffold_core::io::{
    import_mesh, load_cloud, load_project, write_mesh, CloudFormat, EvaluationReport, MeshFormat, ProjectDocument,
};
use scaffold_core::meshing::{difference_mesh, final_mesh, hole_mesh, skin_mesh, TriMesh};
use scaffold_core::metrics::{mass_properties, prototype_assembly, prototype_scaffold, shape_errors, MassProperties};
use scaffold_core::scaffold::{insert_scaffold_obb, insert_scaffold_pov, shrink_wrap, PartAssembly, Primitive, Scaffold};
use scaffold_core::{Error, Vec3};

/// A scaffold file holds either one scaffold or a multi-part assembly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaffoldFile {
    Assembly(PartAssembly),
    Single(Scaffold),
}

impl ScaffoldFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed: Self = serde_json::from_str(&text)
            .map_err(Error::from)
            .with_context(|| format!("{} is not a scaffold or assembly", path.display()))?;
        match &parsed {
            ScaffoldFile::Single(s) => s.validate()?,
            ScaffoldFile::Assembly(a) => {
                for p in &a.parts {
                    p.validate()?;
                }
            }
        }
        Ok(parsed)
    }

    pub fn assembly(self) -> PartAssembly {
        match self {
            ScaffoldFile::Assembly(a) => a,
            ScaffoldFile::Single(s) => PartAssembly::single(s),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

/// Which surface of a scaffold to mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    Skin,
    Hole,
    Difference,
    Final,
}

impl std::str::FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> std::result::Result<Self, Error> {
        match s {
            "skin" => Ok(MeshKind::Skin),
            "hole" => Ok(MeshKind::Hole),
            "difference" => Ok(MeshKind::Difference),
            "final" => Ok(MeshKind::Final),
            other => Err(Error::InvalidArgument(format!("unknown mesh kind {other:?}"))),
        }
    }
}

/// Meshes every part of `assembly`; the final mesh merges the parts'
/// difference meshes.
pub fn mesh_assembly(assembly: &PartAssembly, kind: MeshKind, samples: usize) -> Result<TriMesh> {
    if kind == MeshKind::Final {
        return Ok(final_mesh(assembly, samples)?);
    }
    let mut out: Option<TriMesh> = None;
    for part in &assembly.parts {
        let m = match kind {
            MeshKind::Skin => skin_mesh(part, samples)?,
            MeshKind::Hole => hole_mesh(part, samples)?,
            _ => difference_mesh(part, samples)?,
        };
        match &mut out {
            Some(acc) => acc.append(&m),
            None => out = Some(m),
        }
    }
    out.ok_or_else(|| Error::EmptyInput("assembly has no parts").into())
}

/// Loads a mesh file, or meshes a scaffold JSON file at `samples` per
/// spline segment.
pub fn read_mesh(path: &Path, samples: usize) -> Result<TriMesh> {
    let is_json = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        mesh_assembly(&ScaffoldFile::read(path)?.assembly(), MeshKind::Final, samples)
    } else {
        Ok(import_mesh(path, None).with_context(|| format!("reading {}", path.display()))?)
    }
}

pub struct InsertArgs<'a> {
    pub cloud: &'a Path,
    pub format: Option<CloudFormat>,
    pub view: Option<Vec3>,
    pub axis: usize,
    pub primitive: Primitive,
    pub slices: usize,
    pub handles: usize,
    pub tension: Option<f64>,
}

/// Fits a new scaffold to a cloud, along the view direction when one is
/// given and along an oriented-box axis otherwise.
pub fn insert(args: &InsertArgs) -> Result<(String, usize)> {
    let load = load_cloud(args.cloud, args.format)?;
    let tension = args.tension.unwrap_or(DEFAULT_TENSION);
    let s = match args.view {
        Some(v) => insert_scaffold_pov(&load.cloud, v, args.primitive, args.slices, args.handles, tension)?,
        None => {
            let s = insert_scaffold_obb(&load.cloud, args.primitive, args.slices, args.handles, tension)?;
            if args.axis == 0 {
                s
            } else {
                scaffold_core::scaffold::permute_sweep_axis(&s, &load.cloud, args.axis)?
            }
        }
    };
    Ok((to_json(&s)?, load.dropped))
}

/// Shrink-wraps the listed slices (all when empty). Returns the scaffold
/// and any per-slice warnings.
pub fn shrinkwrap(
    scaffold: &Path,
    cloud: &Path,
    format: Option<CloudFormat>,
    slices: &[usize],
) -> Result<(String, Vec<String>)> {
    let s = match ScaffoldFile::read(scaffold)? {
        ScaffoldFile::Single(s) => s,
        ScaffoldFile::Assembly(_) => {
            return Err(Error::InvalidArgument("shrinkwrap takes a single scaffold, not an assembly".into()).into())
        }
    };
    let load = load_cloud(cloud, format)?;
    let all: Vec<usize> = (0..s.len()).collect();
    let pick = if slices.is_empty() { &all[..] } else { slices };
    let out = shrink_wrap(&s, &load.cloud, pick)?;
    Ok((to_json(&out.scaffold)?, out.warnings))
}

pub fn mesh(scaffold: &Path, kind: MeshKind, samples: usize, format: MeshFormat) -> Result<String> {
    let m = mesh_assembly(&ScaffoldFile::read(scaffold)?.assembly(), kind, samples)?;
    Ok(write_mesh(&m, format))
}

pub fn measure(input: &Path, samples: usize) -> Result<MassProperties> {
    Ok(mass_properties(&read_mesh(input, samples)?)?)
}

fn file_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn compare(
    ideal: &Path,
    subject: &Path,
    samples: usize,
    seed: u64,
    duration: Option<f64>,
    mesh_samples: usize,
) -> Result<String> {
    let a = read_mesh(ideal, mesh_samples)?;
    let b = read_mesh(subject, mesh_samples)?;
    let mut report = shape_errors(&a, &b, samples, seed, duration)?;
    report.ideal_id = Some(file_id(ideal));
    report.subject_id = Some(file_id(subject));
    to_json(&report)
}

pub fn merge(inputs: &[&Path], slices: usize, handles: usize, allow_scale: bool) -> Result<String> {
    let files = inputs.iter().map(|p| ScaffoldFile::read(p)).collect::<Result<Vec<_>>>()?;
    if files.iter().all(|f| matches!(f, ScaffoldFile::Single(_))) {
        let parts: Vec<Scaffold> = files
            .into_iter()
            .filter_map(|f| match f {
                ScaffoldFile::Single(s) => Some(s),
                ScaffoldFile::Assembly(_) => None,
            })
            .collect();
        to_json(&prototype_scaffold(&parts, slices, handles, allow_scale)?)
    } else {
        let assemblies: Vec<PartAssembly> = files.into_iter().map(ScaffoldFile::assembly).collect();
        to_json(&prototype_assembly(&assemblies, slices, handles, allow_scale)?)
    }
}

/// Mesh of an annotated object, plus the scaffold whose base frame grasp
/// poses may be expressed in. An assembly id names the whole assembly and
/// `assembly/part` one part.
pub fn object_mesh<'a>(
    doc: &'a ProjectDocument,
    object: &str,
    samples: usize,
) -> Result<(TriMesh, Option<&'a Scaffold>)> {
    if let Some(a) = doc.assembly(object) {
        return Ok((final_mesh(&a.assembly, samples)?, a.assembly.parts.first()));
    }
    if let Some(s) = doc.object_scaffold(object) {
        return Ok((difference_mesh(s, samples)?, Some(s)));
    }
    if doc.cloud(object).is_some() {
        return Err(Error::InvalidArgument(format!(
            "object {object:?} is a bare point cloud; fit a scaffold before evaluating grasps"
        ))
        .into());
    }
    Err(Error::DanglingReference(format!("no object {object:?}")).into())
}

pub struct GraspEvalArgs {
    pub cone_edges: usize,
    pub directions: usize,
    pub mesh_samples: usize,
    pub gripper: GripperModel,
}

pub fn grasp_eval_doc(doc: &ProjectDocument, grasp_id: &str, args: &GraspEvalArgs) -> Result<GraspQuality> {
    let g = doc
        .grasp(grasp_id)
        .ok_or_else(|| Error::DanglingReference(format!("no grasp {grasp_id:?}")))?;
    let (mesh, base) = object_mesh(doc, &g.annotation.object, args.mesh_samples)?;
    let (pose, _) = g.annotation.world_poses(base)?;
    let (_, q) = evaluate_grasp(&args.gripper, &pose, &mesh, args.cone_edges, args.directions)?;
    Ok(q)
}

pub fn grasp_eval(project: &Path, grasp_id: &str, args: &GraspEvalArgs) -> Result<String> {
    let doc = load_project(project)?;
    to_json(&grasp_eval_doc(&doc, grasp_id, args)?)
}

fn read_path(path: &Path) -> Result<WaypointPath> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let p: WaypointPath = serde_json::from_str(&text).map_err(Error::from)?;
    p.validate()?;
    Ok(p)
}

pub fn path_compare(a: &Path, b: &Path, resample: usize) -> Result<String> {
    let (pa, pb) = (read_path(a)?, read_path(b)?);
    let area = path_ribbon_area(&pa, &pb, resample)?;
    to_json(&EvaluationReport::PathDifference {
        id: format!("{}-vs-{}", pa.id, pb.id),
        a: pa.id,
        b: pb.id,
        resample,
        ribbon_area: area,
    })
}

/// Name of the typed error behind a failure, for exit messages.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return e.kind();
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "IoError";
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return "SerializationError";
        }
    }
    "Error"
}
