use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::meshing::TriMesh;

/// Integral properties of a closed mesh at unit density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassProperties {
    pub volume: f64,
    pub com: Vec3,
    /// Inertia tensor about the center of mass, world axes.
    pub inertia: Mat3,
    pub lambda_max: f64,
    pub diag_bb: f64,
    pub surface_area: f64,
    pub bbox_min: Vec3,
    pub bbox_max: Vec3,
}

/// Exact volume, center of mass and inertia of a closed, outward-oriented
/// triangle mesh from polyhedral surface integrals.
pub fn mass_properties(mesh: &TriMesh) -> Result<MassProperties> {
    mesh.check_watertight()?;
    let (lo, hi) = mesh.bounds().unwrap();
    // integrate about the box center to limit cancellation far from the origin
    let r = (lo + hi) * 0.5;
    let mut acc = [0.0f64; 10];
    for t in &mesh.triangles {
        let [a, b, c] = mesh.corners(t).map(|v| v - r);
        let d = (b - a).cross(&(c - a));
        let sx = subexpressions(a.x, b.x, c.x);
        let sy = subexpressions(a.y, b.y, c.y);
        let sz = subexpressions(a.z, b.z, c.z);
        acc[0] += d.x * sx.f1;
        acc[1] += d.x * sx.f2;
        acc[2] += d.y * sy.f2;
        acc[3] += d.z * sz.f2;
        acc[4] += d.x * sx.f3;
        acc[5] += d.y * sy.f3;
        acc[6] += d.z * sz.f3;
        acc[7] += d.x * (a.y * sx.g[0] + b.y * sx.g[1] + c.y * sx.g[2]);
        acc[8] += d.y * (a.z * sy.g[0] + b.z * sy.g[1] + c.z * sy.g[2]);
        acc[9] += d.z * (a.x * sz.g[0] + b.x * sz.g[1] + c.x * sz.g[2]);
    }
    let mult = [
        1.0 / 6.0,
        1.0 / 24.0,
        1.0 / 24.0,
        1.0 / 24.0,
        1.0 / 60.0,
        1.0 / 60.0,
        1.0 / 60.0,
        1.0 / 120.0,
        1.0 / 120.0,
        1.0 / 120.0,
    ];
    for (v, m) in acc.iter_mut().zip(mult) {
        *v *= m;
    }
    let volume = acc[0];
    if !(volume > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mesh encloses volume {volume}; it must be closed and outward-oriented"
        )));
    }
    let c = Vec3::new(acc[1], acc[2], acc[3]) / volume;
    let xx = acc[4] - volume * c.x * c.x;
    let yy = acc[5] - volume * c.y * c.y;
    let zz = acc[6] - volume * c.z * c.z;
    let xy = acc[7] - volume * c.x * c.y;
    let yz = acc[8] - volume * c.y * c.z;
    let zx = acc[9] - volume * c.z * c.x;
    #[rustfmt::skip]
    let inertia = Mat3::new(
        yy + zz, -xy, -zx,
        -xy, zz + xx, -yz,
        -zx, -yz, xx + yy,
    );
    Ok(MassProperties {
        volume,
        com: c + r,
        inertia,
        lambda_max: lambda_max(&inertia),
        diag_bb: (hi - lo).norm(),
        surface_area: mesh.surface_area(),
        bbox_min: lo,
        bbox_max: hi,
    })
}

struct Sub {
    f1: f64,
    f2: f64,
    f3: f64,
    g: [f64; 3],
}

fn subexpressions(w0: f64, w1: f64, w2: f64) -> Sub {
    let t0 = w0 + w1;
    let f1 = t0 + w2;
    let t1 = w0 * w0;
    let t2 = t1 + w1 * t0;
    let f2 = t2 + w2 * f1;
    let f3 = w0 * t1 + w1 * t2 + w2 * f2;
    Sub {
        f1,
        f2,
        f3,
        g: [f2 + w0 * (f1 + w0), f2 + w1 * (f1 + w1), f2 + w2 * (f1 + w2)],
    }
}

pub(crate) fn lambda_max(m: &Mat3) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.max()
}

/// Properties of a multi-part object whose part meshes are assumed disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyMass {
    pub total: MassProperties,
    pub parts: Vec<MassProperties>,
    /// Pairs of part indices whose surfaces intersect; their shared volume is
    /// counted twice.
    pub overlaps: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

/// Sums per-part properties, moving each inertia to the common center of
/// mass. Parts overlap when a triangle centroid of one, nudged just inside
/// its own surface, lies inside another.
pub fn assembly_mass_properties(parts: &[TriMesh]) -> Result<AssemblyMass> {
    if parts.is_empty() {
        return Err(Error::EmptyInput("assembly has no parts"));
    }
    let props = parts.iter().map(mass_properties).collect::<Result<Vec<_>>>()?;
    let total = combine(&props);
    let mut overlaps = Vec::new();
    let mut warnings = Vec::new();
    for i in 0..parts.len() {
        for j in (i + 1)..parts.len() {
            if boxes_disjoint(&props[i], &props[j]) {
                continue;
            }
            let hit = |a: usize, b: usize| {
                let eps = 1e-6 * props[a].diag_bb;
                parts[a].triangles.iter().any(|t| {
                    let [p, q, r] = parts[a].corners(t);
                    let n = (q - p).cross(&(r - p));
                    let Some(n) = n.try_normalize(1e-300) else {
                        return false;
                    };
                    point_inside(&parts[b], &((p + q + r) / 3.0 - n * eps))
                })
            };
            if hit(i, j) || hit(j, i) {
                overlaps.push((i, j));
                warnings.push(format!("parts {i} and {j} overlap; shared volume is counted twice"));
            }
        }
    }
    Ok(AssemblyMass {
        total,
        parts: props,
        overlaps,
        warnings,
    })
}

fn boxes_disjoint(a: &MassProperties, b: &MassProperties) -> bool {
    (0..3).any(|k| a.bbox_max[k] < b.bbox_min[k] || b.bbox_max[k] < a.bbox_min[k])
}

/// Parallel-axis combination of disjoint parts.
pub fn combine(parts: &[MassProperties]) -> MassProperties {
    let volume: f64 = parts.iter().map(|p| p.volume).sum();
    let com = parts.iter().map(|p| p.com * p.volume).sum::<Vec3>() / volume;
    let mut inertia = Mat3::zeros();
    for p in parts {
        let d = p.com - com;
        inertia += p.inertia + (Mat3::identity() * d.norm_squared() - d * d.transpose()) * p.volume;
    }
    let lo = parts.iter().map(|p| p.bbox_min).reduce(|a, b| a.inf(&b)).unwrap();
    let hi = parts.iter().map(|p| p.bbox_max).reduce(|a, b| a.sup(&b)).unwrap();
    MassProperties {
        volume,
        com,
        inertia,
        lambda_max: lambda_max(&inertia),
        diag_bb: (hi - lo).norm(),
        surface_area: parts.iter().map(|p| p.surface_area).sum(),
        bbox_min: lo,
        bbox_max: hi,
    }
}

/// Ray-parity inside test along a fixed skewed direction.
pub fn point_inside(mesh: &TriMesh, p: &Vec3) -> bool {
    let dir = Vec3::new(0.5773, 0.5891, 0.5654).normalize();
    let mut crossings = 0;
    for t in &mesh.triangles {
        let [a, b, c] = mesh.corners(t);
        let e1 = b - a;
        let e2 = c - a;
        let h = dir.cross(&e2);
        let det = e1.dot(&h);
        if det.abs() < 1e-300 {
            continue;
        }
        let s = p - a;
        let u = s.dot(&h) / det;
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let q = s.cross(&e1);
        let v = dir.dot(&q) / det;
        if v < 0.0 || u + v > 1.0 {
            continue;
        }
        if e2.dot(&q) / det > 0.0 {
            crossings += 1;
        }
    }
    crossings % 2 == 1
}
