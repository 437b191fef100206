use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cloud::parse_ply_data;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::meshing::{MeshLabel, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFormat {
    Obj,
    Ply,
    Stl,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or_default()
            .to_ascii_lowercase();
        ext.parse()
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "ply" => Ok(MeshFormat::Ply),
            "stl" => Ok(MeshFormat::Stl),
            other => Err(Error::UnsupportedFormat(format!("unknown mesh format {other:?}"))),
        }
    }
}

/// Wavefront OBJ with 1-based triangle indices.
pub fn write_obj(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.vertices.len() * 40 + mesh.triangles.len() * 24);
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn write_ply(mesh: &TriMesh) -> String {
    let mut s = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// ASCII STL. Vertices are repeated per facet, as the format requires.
pub fn write_stl(mesh: &TriMesh, name: &str) -> String {
    let mut s = format!("solid {name}\n");
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
        let n = (b - a).cross(&(c - a));
        let n = if n.norm() > 0.0 { n.normalize() } else { n };
        let _ = writeln!(s, "  facet normal {:?} {:?} {:?}\n    outer loop", n.x, n.y, n.z);
        for p in [a, b, c] {
            let _ = writeln!(s, "      vertex {:?} {:?} {:?}", p.x, p.y, p.z);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    let _ = writeln!(s, "endsolid {name}");
    s
}

pub fn write_mesh(mesh: &TriMesh, format: MeshFormat) -> String {
    match format {
        MeshFormat::Obj => write_obj(mesh),
        MeshFormat::Ply => write_ply(mesh),
        MeshFormat::Stl => write_stl(mesh, "scaffold"),
    }
}

/// Writes `mesh` to `path`; the format follows the extension unless given.
pub fn export_mesh(mesh: &TriMesh, path: &Path, format: Option<MeshFormat>) -> Result<()> {
    let format = match format {
        Some(f) => f,
        None => MeshFormat::from_path(path)?,
    };
    std::fs::write(path, write_mesh(mesh, format))?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn coord(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing coordinate"))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {tok:?} as a number")))
}

fn fan(poly: &[u32]) -> impl Iterator<Item = [u32; 3]> + '_ {
    (1..poly.len() - 1).map(move |k| [poly[0], poly[k], poly[k + 1]])
}

/// OBJ vertices and faces; polygons are fan-triangulated, texture and
/// normal indices ignored, negative (relative) indices resolved.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("v") => vertices.push(Vec3::new(
                coord(toks.next(), line)?,
                coord(toks.next(), line)?,
                coord(toks.next(), line)?,
            )),
            Some("f") => {
                let poly = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or_default();
                        let k: i64 = head
                            .parse()
                            .map_err(|_| parse_err(line, format!("bad face index {t:?}")))?;
                        let n = vertices.len() as i64;
                        let idx = if k < 0 { n + k } else { k - 1 };
                        if idx < 0 || idx >= n {
                            return Err(parse_err(line, format!("face index {k} out of range")));
                        }
                        Ok(idx as u32)
                    })
                    .collect::<Result<Vec<u32>>>()?;
                if poly.len() < 3 {
                    return Err(parse_err(line, "face needs at least 3 vertices"));
                }
                triangles.extend(fan(&poly));
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles, MeshLabel::Other)
}

pub fn parse_ply_mesh(text: &str) -> Result<TriMesh> {
    let data = parse_ply_data(text)?;
    let n = data.vertices.len() as u32;
    if data.faces.iter().flatten().any(|&i| i >= n) {
        return Err(parse_err(0, "PLY face index out of range"));
    }
    let triangles = data.faces.iter().flat_map(|f| fan(f)).collect();
    TriMesh::new(data.vertices, triangles, MeshLabel::Other)
}

/// ASCII STL; coincident corners are welded so closed solids come back
/// watertight.
pub fn parse_stl(text: &str) -> Result<TriMesh> {
    if !text.trim_start().starts_with("solid") {
        return Err(Error::UnsupportedFormat("binary STL is not supported".into()));
    }
    let mut index: HashMap<[u64; 3], u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut corners = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("vertex") => {
                let p = Vec3::new(coord(toks.next(), line)?, coord(toks.next(), line)?, coord(toks.next(), line)?);
                // adding zero folds -0.0 into 0.0
                let key = [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()];
                let id = *index.entry(key).or_insert_with(|| {
                    vertices.push(p);
                    (vertices.len() - 1) as u32
                });
                corners.push(id);
            }
            Some("endloop") => {
                if corners.len() != 3 {
                    return Err(parse_err(line, "STL facet must have 3 vertices"));
                }
                triangles.push([corners[0], corners[1], corners[2]]);
                corners.clear();
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles, MeshLabel::Other)
}

pub fn parse_mesh(text: &str, format: MeshFormat) -> Result<TriMesh> {
    match format {
        MeshFormat::Obj => parse_obj(text),
        MeshFormat::Ply => parse_ply_mesh(text),
        MeshFormat::Stl => parse_stl(text),
    }
}

pub fn import_mesh(path: &Path, format: Option<MeshFormat>) -> Result<TriMesh> {
    let format = match format {
        Some(f) => f,
        None => MeshFormat::from_path(path)?,
    };
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::UnsupportedFormat(format!("{} is not an ASCII mesh", path.display())))?;
    parse_mesh(&text, format)
}
