//! Synthetic objects with known geometry, for demos, tests and benchmarks.

use std::f64::consts::TAU;

use crate::geometry::{Pose, SlicePlane, Vec3};
use crate::meshing::{MeshLabel, TriMesh};
use crate::scaffold::{templates, PointCloud, Scaffold, Slice};

/// Noiseless points on the side of a cylinder standing on the XY plane,
/// alternate rings staggered by half a step.
pub fn cylinder_cloud(radius: f64, height: f64, n_around: usize, n_along: usize) -> PointCloud {
    let mut pts = Vec::with_capacity(n_around * n_along);
    for j in 0..n_along {
        let z = height * j as f64 / (n_along.max(2) - 1) as f64;
        for k in 0..n_around {
            let t = TAU * (k as f64 + 0.5 * (j % 2) as f64) / n_around as f64;
            pts.push(Vec3::new(radius * t.cos(), radius * t.sin(), z));
        }
    }
    PointCloud::new(pts).with_name("cylinder")
}

/// Closed cylinder from z = 0 to `height`, its side split into `segments`
/// facets. Vertices lie on the true surface.
pub fn cylinder_mesh(radius: f64, height: f64, segments: usize) -> TriMesh {
    let n = segments.max(3) as u32;
    let mut vertices = Vec::with_capacity(2 * n as usize + 2);
    for z in [0.0, height] {
        for k in 0..n {
            let t = TAU * k as f64 / n as f64;
            vertices.push(Vec3::new(radius * t.cos(), radius * t.sin(), z));
        }
    }
    vertices.push(Vec3::zeros());
    vertices.push(Vec3::new(0.0, 0.0, height));
    let (bottom, top) = (2 * n, 2 * n + 1);
    let mut triangles = Vec::with_capacity(4 * n as usize);
    for k in 0..n {
        let k1 = (k + 1) % n;
        triangles.push([k, k1, n + k1]);
        triangles.push([k, n + k1, n + k]);
        triangles.push([bottom, k1, k]);
        triangles.push([top, n + k, n + k1]);
    }
    TriMesh {
        vertices,
        triangles,
        label: MeshLabel::Other,
    }
}

/// Circular slices of the given radii stacked along +Z.
pub fn stacked_circles(radii: &[f64], handles: usize, spacing: f64, tension: f64) -> crate::Result<Scaffold> {
    let slices = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            Slice::new(
                SlicePlane::new(Pose::from_translation(Vec3::new(0.0, 0.0, i as f64 * spacing))),
                templates::ellipse(handles, r, r),
            )
        })
        .collect();
    Scaffold::new("cylinder", slices, tension)
}
