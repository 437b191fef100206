use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TriMesh;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scaffold::{PointCloud, Scaffold};

/// Area-weighted random points on a mesh surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSampleSet {
    pub points: Vec<Vec3>,
    pub seed: u64,
    pub count: usize,
}

/// Draws `count` points uniformly by area. The same mesh, count and seed
/// always give the same points.
pub fn sample_surface(mesh: &TriMesh, count: usize, seed: u64) -> Result<SurfaceSampleSet> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyInput("mesh has no triangles to sample"));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut cdf = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        total += mesh.triangle_area(i);
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::EmptyInput("mesh has zero surface area"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..count)
        .map(|_| {
            let x = rng.random::<f64>() * total;
            let i = cdf.partition_point(|&c| c <= x).min(cdf.len() - 1);
            let [a, b, c] = mesh.corners(&mesh.triangles[i]);
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2)
        })
        .collect();
    Ok(SurfaceSampleSet {
        points,
        seed,
        count,
    })
}

/// Point-cloud view of a mesh: `density` samples per square meter.
pub fn cloud_view(mesh: &TriMesh, density: f64, seed: u64) -> Result<PointCloud> {
    if !(density >= 0.0) || !density.is_finite() {
        return Err(Error::InvalidArgument(format!("density {density} must be non-negative")));
    }
    let count = (density * mesh.surface_area()).round() as usize;
    if count == 0 {
        return Ok(PointCloud::default());
    }
    Ok(PointCloud::new(sample_surface(mesh, count, seed)?.points))
}

/// Line drawing of a scaffold: sampled contour rings plus connectors joining
/// corresponding handles of consecutive slices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Wireframe {
    pub vertices: Vec<Vec3>,
    pub ring_edges: Vec<[u32; 2]>,
    pub connector_edges: Vec<[u32; 2]>,
}

impl Wireframe {
    pub fn edge_count(&self) -> usize {
        self.ring_edges.len() + self.connector_edges.len()
    }
}

/// Builds the wireframe with `samples_per_segment` points per handle
/// interval. Rings of one kind share a common resolution so connectors can
/// follow handle indices; hole connectors only span slices that both carry a
/// hole.
pub fn wireframe_view(scaffold: &Scaffold, samples_per_segment: usize) -> Wireframe {
    let sps = samples_per_segment.max(1);
    let t = scaffold.tension;
    let mut w = Wireframe::default();
    let handles = |f: &dyn Fn(&crate::scaffold::Slice) -> Option<usize>| {
        scaffold.slices.iter().filter_map(f).max().unwrap_or(0)
    };
    let n_ext = handles(&|s| Some(s.external.len()));
    let n_hole = handles(&|s| s.hole.as_ref().map(Vec::len));
    let add_ring = |w: &mut Wireframe, pts: Vec<Vec3>| -> u32 {
        let off = w.vertices.len() as u32;
        let m = pts.len() as u32;
        w.vertices.extend(pts);
        w.ring_edges.extend((0..m).map(|k| [off + k, off + (k + 1) % m]));
        off
    };
    let mut prev_ext: Option<u32> = None;
    let mut prev_hole: Option<u32> = None;
    for s in &scaffold.slices {
        let ring = s.external_spline(t).sample_count(n_ext * sps);
        let off = add_ring(&mut w, ring.iter().map(|p| s.plane.to_world(p)).collect());
        if let Some(p) = prev_ext {
            w.connector_edges
                .extend((0..n_ext as u32).map(|k| [p + k * sps as u32, off + k * sps as u32]));
        }
        prev_ext = Some(off);
        prev_hole = match s.hole_spline(t) {
            Some(h) => {
                let ring = h.sample_count(n_hole * sps);
                let off = add_ring(&mut w, ring.iter().map(|p| s.plane.to_world(p)).collect());
                if let Some(p) = prev_hole {
                    w.connector_edges
                        .extend((0..n_hole as u32).map(|k| [p + k * sps as u32, off + k * sps as u32]));
                }
                Some(off)
            }
            None => None,
        };
    }
    w
}
