//! Triangle meshes built from scaffolds, plus topology bookkeeping and
//! surface sampling.

mod sample;
mod sweep;

pub use sample::{cloud_view, sample_surface, wireframe_view, SurfaceSampleSet, Wireframe};
pub use sweep::{difference_mesh, final_mesh, hole_mesh, skin_mesh};

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{triangle_area, Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshLabel {
    Skin,
    Hole,
    Difference,
    Final,
    #[default]
    Other,
}

/// Indexed triangle mesh.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    #[serde(default)]
    pub label: MeshLabel,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>, label: MeshLabel) -> Result<Self> {
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i as usize >= n)) {
            return Err(Error::InvalidArgument(format!(
                "triangle {t:?} references a vertex beyond {n}"
            )));
        }
        if vertices.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidArgument("non-finite mesh vertex".into()));
        }
        Ok(Self {
            vertices,
            triangles,
            label,
        })
    }

    pub fn empty(label: MeshLabel) -> Self {
        Self {
            label,
            ..Self::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub(crate) fn corners(&self, t: &[u32; 3]) -> [Vec3; 3] {
        t.map(|i| self.vertices[i as usize])
    }

    /// Appends another mesh's vertices and triangles.
    pub fn append(&mut self, other: &TriMesh) {
        let off = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + off)));
    }

    /// Reverses every triangle's winding.
    pub fn flip(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    pub fn transformed(&self, pose: &Pose) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| pose.transform_point(v)).collect(),
            ..self.clone()
        }
    }

    /// Uniform scale about the origin.
    pub fn scaled(&self, factor: f64) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    pub fn triangle_area(&self, index: usize) -> f64 {
        let [a, b, c] = self.corners(&self.triangles[index]);
        triangle_area(&a, &b, &c)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    /// Divergence-theorem volume; positive for closed outward-oriented meshes.
    pub fn signed_volume(&self) -> f64 {
        let o = self.vertices.first().copied().unwrap_or_else(Vec3::zeros);
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = self.corners(t);
                (a - o).dot(&(b - o).cross(&(c - o)))
            })
            .sum::<f64>()
            / 6.0
    }

    /// Axis-aligned bounds of the referenced vertices.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let mut it = self.triangles.iter().flatten().map(|&i| self.vertices[i as usize]);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.inf(&v), hi.sup(&v))))
    }

    /// Directed edges without exactly one opposite partner, or used more than
    /// once in the same direction.
    pub fn boundary_edges(&self) -> Vec<(u32, u32)> {
        let mut count: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *count.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        let mut bad: Vec<(u32, u32)> = count
            .iter()
            .filter(|(&(a, b), &c)| c != 1 || count.get(&(b, a)) != Some(&1))
            .map(|(&e, _)| e)
            .collect();
        bad.sort_unstable();
        bad
    }

    /// Closed, consistently oriented, every edge shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        !self.triangles.is_empty() && self.boundary_edges().is_empty()
    }

    pub fn check_watertight(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::EmptyInput("mesh has no triangles"));
        }
        let bad = self.boundary_edges();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::NotWatertight { boundary_edges: bad })
        }
    }

    /// V - E + F over referenced vertices and undirected edges.
    pub fn euler_characteristic(&self) -> i64 {
        let verts: HashSet<u32> = self.triangles.iter().flatten().copied().collect();
        let edges: HashSet<(u32, u32)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        verts.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    /// Triangle sets connected through shared vertices.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for t in &self.triangles {
            let a = find(&mut parent, t[0] as usize);
            for &v in &t[1..] {
                let b = find(&mut parent, v as usize);
                parent[b] = a;
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut order = Vec::new();
        for (i, t) in self.triangles.iter().enumerate() {
            let r = find(&mut parent, t[0] as usize);
            groups
                .entry(r)
                .or_insert_with(|| {
                    order.push(r);
                    Vec::new()
                })
                .push(i);
        }
        order.into_iter().map(|r| groups.remove(&r).unwrap()).collect()
    }

    /// The given triangles as a standalone mesh with compacted vertices.
    pub fn submesh(&self, triangles: &[usize]) -> TriMesh {
        let mut map: HashMap<u32, u32> = HashMap::new();
        let mut vertices = Vec::new();
        let tris = triangles
            .iter()
            .map(|&i| {
                self.triangles[i].map(|v| {
                    *map.entry(v).or_insert_with(|| {
                        vertices.push(self.vertices[v as usize]);
                        (vertices.len() - 1) as u32
                    })
                })
            })
            .collect();
        TriMesh {
            vertices,
            triangles: tris,
            label: self.label,
        }
    }

    /// Smallest triangle area, or infinity for an empty mesh.
    pub fn min_triangle_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| self.triangle_area(i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Closed axis-aligned box mesh with outward winding.
pub fn box_mesh(min: Vec3, max: Vec3) -> TriMesh {
    let v = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let quads = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriMesh {
        vertices: (0..8).map(v).collect(),
        triangles,
        label: MeshLabel::Other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_topology() {
        let m = box_mesh(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        assert!(m.is_watertight());
        assert_eq!(m.euler_characteristic(), 2);
        assert!((m.signed_volume() - 1.0).abs() < 1e-15);
        assert!((m.surface_area() - 6.0).abs() < 1e-15);
        assert_eq!(m.connected_components().len(), 1);
    }

    #[test]
    fn open_mesh_reports_edges() {
        let mut m = box_mesh(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        m.triangles.pop();
        assert!(!m.is_watertight());
        match m.check_watertight().unwrap_err() {
            Error::NotWatertight { boundary_edges } => assert_eq!(boundary_edges.len(), 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn append_and_components() {
        let mut m = box_mesh(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        m.append(&box_mesh(Vec3::new(2.0, 0.0, 0.0), Vec3::new(3.0, 1.0, 1.0)));
        assert_eq!(m.connected_components().len(), 2);
        assert_eq!(m.euler_characteristic(), 4);
        let sub = m.submesh(&m.connected_components()[1]);
        assert_eq!(sub.vertices.len(), 8);
        assert!(sub.is_watertight());
    }

    #[test]
    fn out_of_range_index() {
        assert!(TriMesh::new(vec![Vec3::zeros()], vec![[0, 0, 1]], MeshLabel::Other).is_err());
    }
}
