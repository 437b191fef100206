use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grasp::{GraspAnnotation, GraspQuality, WaypointPath};
use crate::metrics::ShapeErrorReport;
use crate::scaffold::{PartAssembly, PointCloud, Scaffold};

/// Version written to and required from project and report files.
pub const FORMAT_VERSION: &str = "1";

fn yes() -> bool {
    true
}

fn is_default_flags(f: &ItemFlags) -> bool {
    *f == ItemFlags::default()
}

/// Display and edit state of one document item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFlags {
    #[serde(default = "yes")]
    pub visible: bool,
    #[serde(default)]
    pub locked: bool,
}

impl Default for ItemFlags {
    fn default() -> Self {
        Self {
            visible: true,
            locked: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudItem {
    pub id: String,
    pub cloud: PointCloud,
    #[serde(default, skip_serializing_if = "is_default_flags")]
    pub flags: ItemFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyItem {
    pub id: String,
    /// Cloud the assembly was traced over.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<String>,
    pub assembly: PartAssembly,
    #[serde(default, skip_serializing_if = "is_default_flags")]
    pub flags: ItemFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspItem {
    pub annotation: GraspAnnotation,
    #[serde(default, skip_serializing_if = "is_default_flags")]
    pub flags: ItemFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathItem {
    pub path: WaypointPath,
    #[serde(default, skip_serializing_if = "is_default_flags")]
    pub flags: ItemFlags,
}

/// One stored evaluation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluationReport {
    ShapeError {
        id: String,
        ideal: String,
        subject: String,
        report: ShapeErrorReport,
    },
    GraspQuality {
        id: String,
        grasp: String,
        quality: GraspQuality,
    },
    PathDifference {
        id: String,
        a: String,
        b: String,
        resample: usize,
        ribbon_area: f64,
    },
}

impl EvaluationReport {
    pub fn id(&self) -> &str {
        match self {
            EvaluationReport::ShapeError { id, .. }
            | EvaluationReport::GraspQuality { id, .. }
            | EvaluationReport::PathDifference { id, .. } => id,
        }
    }
}

/// Everything one annotation project holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectDocument {
    pub version: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub clouds: Vec<CloudItem>,
    #[serde(default)]
    pub assemblies: Vec<AssemblyItem>,
    #[serde(default)]
    pub grasps: Vec<GraspItem>,
    #[serde(default)]
    pub paths: Vec<PathItem>,
    #[serde(default)]
    pub reports: Vec<EvaluationReport>,
}

impl Default for ProjectDocument {
    fn default() -> Self {
        Self::new("")
    }
}

impl ProjectDocument {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            version: FORMAT_VERSION.to_string(),
            name: name.into(),
            clouds: Vec::new(),
            assemblies: Vec::new(),
            grasps: Vec::new(),
            paths: Vec::new(),
            reports: Vec::new(),
        }
    }

    pub fn cloud(&self, id: &str) -> Option<&CloudItem> {
        self.clouds.iter().find(|c| c.id == id)
    }

    pub fn assembly(&self, id: &str) -> Option<&AssemblyItem> {
        self.assemblies.iter().find(|a| a.id == id)
    }

    pub fn assembly_mut(&mut self, id: &str) -> Option<&mut AssemblyItem> {
        self.assemblies.iter_mut().find(|a| a.id == id)
    }

    pub fn grasp(&self, id: &str) -> Option<&GraspItem> {
        self.grasps.iter().find(|g| g.annotation.id == id)
    }

    pub fn path(&self, id: &str) -> Option<&PathItem> {
        self.paths.iter().find(|p| p.path.id == id)
    }

    /// Scaffold an object reference points at: an assembly id (its first
    /// part) or `assembly/part` naming one part.
    pub fn object_scaffold(&self, object: &str) -> Option<&Scaffold> {
        if let Some(a) = self.assembly(object) {
            return a.assembly.parts.first();
        }
        let (aid, part) = object.split_once('/')?;
        self.assembly(aid)?.assembly.parts.iter().find(|p| p.name == part)
    }

    fn object_exists(&self, object: &str) -> bool {
        self.cloud(object).is_some() || self.object_scaffold(object).is_some()
    }

    /// Identifiers are unique per item kind, scaffolds only name existing
    /// clouds, and annotations only name existing scaffolds or clouds.
    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: self.version.clone(),
                expected: FORMAT_VERSION.into(),
            });
        }
        fn unique<'a>(kind: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
            let mut seen = HashSet::new();
            for id in ids {
                if !seen.insert(id) {
                    return Err(Error::InvalidArgument(format!("duplicate {kind} id {id:?}")));
                }
            }
            Ok(())
        }
        unique("cloud", self.clouds.iter().map(|c| c.id.as_str()))?;
        unique("assembly", self.assemblies.iter().map(|a| a.id.as_str()))?;
        unique("grasp", self.grasps.iter().map(|g| g.annotation.id.as_str()))?;
        unique("path", self.paths.iter().map(|p| p.path.id.as_str()))?;
        unique("report", self.reports.iter().map(EvaluationReport::id))?;
        for a in &self.assemblies {
            let clouds = a
                .cloud
                .iter()
                .chain(a.assembly.parts.iter().filter_map(|p| p.source_cloud.as_ref()));
            for c in clouds {
                if self.cloud(c).is_none() {
                    return Err(Error::DanglingReference(format!(
                        "assembly {:?} names missing cloud {c:?}",
                        a.id
                    )));
                }
            }
            for p in &a.assembly.parts {
                p.validate().map_err(|e| Error::Part {
                    part: format!("{}/{}", a.id, p.name),
                    source: Box::new(e),
                })?;
            }
        }
        for g in &self.grasps {
            if !self.object_exists(&g.annotation.object) {
                return Err(Error::DanglingReference(format!(
                    "grasp {:?} names missing object {:?}",
                    g.annotation.id, g.annotation.object
                )));
            }
        }
        for p in &self.paths {
            p.path.validate()?;
            if !self.object_exists(&p.path.object) {
                return Err(Error::DanglingReference(format!(
                    "path {:?} names missing object {:?}",
                    p.path.id, p.path.object
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a document, checking the version before anything else so old
    /// or future files fail with an explicit upgrade message.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        check_version(&value)?;
        let doc: ProjectDocument = serde_json::from_value(value)?;
        doc.validate()?;
        Ok(doc)
    }
}

fn check_version(value: &serde_json::Value) -> Result<()> {
    match value.get("version").and_then(|v| v.as_str()) {
        Some(FORMAT_VERSION) => Ok(()),
        Some(other) => Err(Error::VersionMismatch {
            found: other.into(),
            expected: FORMAT_VERSION.into(),
        }),
        None => Err(Error::VersionMismatch {
            found: String::new(),
            expected: FORMAT_VERSION.into(),
        }),
    }
}

/// Writes through a sibling temporary file so a failed save never leaves a
/// half-written document behind.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_project(doc: &ProjectDocument, path: &Path) -> Result<()> {
    doc.validate()?;
    write_atomic(path, &doc.to_json()?)
}

pub fn load_project(path: &Path) -> Result<ProjectDocument> {
    ProjectDocument::from_json(&std::fs::read_to_string(path)?)
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    version: String,
    reports: Vec<EvaluationReport>,
}

pub fn save_reports(reports: &[EvaluationReport], path: &Path) -> Result<()> {
    let file = ReportFile {
        version: FORMAT_VERSION.into(),
        reports: reports.to_vec(),
    };
    write_atomic(path, &serde_json::to_string_pretty(&file)?)
}

pub fn load_reports(path: &Path) -> Result<Vec<EvaluationReport>> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    check_version(&value)?;
    let file: ReportFile = serde_json::from_value(value)?;
    Ok(file.reports)
}
