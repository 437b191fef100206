use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::{Mat3, Vec2, Vec3};
use crate::config::TOLERANCES;
use crate::error::{Error, Result};

/// Box with orthonormal axes sorted by descending point variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBoundingBox {
    pub center: Vec3,
    pub axes: [Vec3; 3],
    pub half_extents: [f64; 3],
}

impl OrientedBoundingBox {
    /// Coordinates of `p` along each box axis, relative to the center.
    pub fn local(&self, p: &Vec3) -> Vec3 {
        let d = p - self.center;
        Vec3::new(self.axes[0].dot(&d), self.axes[1].dot(&d), self.axes[2].dot(&d))
    }

    pub fn contains(&self, p: &Vec3, slack: f64) -> bool {
        let l = self.local(p);
        (0..3).all(|k| l[k].abs() <= self.half_extents[k] + slack)
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.iter().product::<f64>()
    }
}

/// Covariance-PCA oriented bounding box.
///
/// When two or three covariance eigenvalues coincide the principal directions
/// are not unique; the ambiguous subspace is then resolved by the orientation
/// of minimal box volume, searched with rotating calipers.
pub fn compute_obb(points: &[Vec3]) -> Result<OrientedBoundingBox> {
    if points.is_empty() {
        return Err(Error::EmptyInput("point cloud has no points"));
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vec3>() / n;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n;

    let eig = SymmetricEigen::new(cov);
    let mut pairs: Vec<(f64, Vec3)> = (0..3)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let scale = pairs[0].0.abs().max(1e-300);
    let tied = |a: f64, b: f64| (a - b).abs() <= TOLERANCES.eigen_degeneracy * scale;
    let t01 = tied(pairs[0].0, pairs[1].0);
    let t12 = tied(pairs[1].0, pairs[2].0);

    let axes: [Vec3; 3] = match (t01, t12) {
        (false, false) => [pairs[0].1, pairs[1].1, pairs[2].1],
        (true, true) => isotropic_axes(points),
        (true, false) => {
            let fixed = pairs[2].1;
            let [a, b] = min_area_in_plane(points, &fixed);
            order_by_spread(points, [a, b, fixed], &[true, true, false])
        }
        (false, true) => {
            let fixed = pairs[0].1;
            let [a, b] = min_area_in_plane(points, &fixed);
            order_by_spread(points, [fixed, a, b], &[false, true, true])
        }
    };
    Ok(fit_box(points, canonical_signs(axes)))
}

fn canonical_signs(axes: [Vec3; 3]) -> [Vec3; 3] {
    let fix = |v: Vec3| {
        let k = v.iamax();
        if v[k] < 0.0 {
            -v
        } else {
            v
        }
    };
    let a0 = fix(axes[0].normalize());
    let a1 = fix((axes[1] - a0 * a0.dot(&axes[1])).normalize());
    [a0, a1, a0.cross(&a1)]
}

fn fit_box(points: &[Vec3], axes: [Vec3; 3]) -> OrientedBoundingBox {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            let s = axes[k].dot(p);
            lo[k] = lo[k].min(s);
            hi[k] = hi[k].max(s);
        }
    }
    let mut center = Vec3::zeros();
    let mut half = [0.0; 3];
    for k in 0..3 {
        center += axes[k] * (0.5 * (lo[k] + hi[k]));
        half[k] = (0.5 * (hi[k] - lo[k])).max(0.5 * TOLERANCES.min_slice_separation);
    }
    OrientedBoundingBox {
        center,
        axes,
        half_extents: half,
    }
}

/// Sorts candidate axes by descending variance, keeping fixed entries in place
/// and ordering the free ones by variance then extent.
fn order_by_spread(points: &[Vec3], axes: [Vec3; 3], free: &[bool; 3]) -> [Vec3; 3] {
    let spread = |a: &Vec3| {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            let s = a.dot(p);
            lo = lo.min(s);
            hi = hi.max(s);
        }
        hi - lo
    };
    let idx: Vec<usize> = (0..3).filter(|&k| free[k]).collect();
    let mut out = axes;
    if idx.len() == 2 {
        let (i, j) = (idx[0], idx[1]);
        if spread(&axes[j]) > spread(&axes[i]) * (1.0 + 1e-12) {
            out.swap(i, j);
        }
    }
    out
}

fn convex_hull_2d(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &Vec2, a: &Vec2, b: &Vec2| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut lower: Vec<Vec2> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimal-area rectangle of the projection onto the plane orthogonal to
/// `normal`; returns its two in-plane axes (world vectors).
fn min_area_in_plane(points: &[Vec3], normal: &Vec3) -> [Vec3; 2] {
    let n = normal.normalize();
    let u = super::any_perpendicular(&n);
    // prefer a world axis as the in-plane reference for determinism
    let u = [Vec3::x(), Vec3::y(), Vec3::z()]
        .iter()
        .map(|w| w - n * n.dot(w))
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .filter(|w| w.norm() > 1e-9)
        .map(|w| w.normalize())
        .unwrap_or(u);
    let v = n.cross(&u);
    let proj: Vec<Vec2> = points.iter().map(|p| Vec2::new(u.dot(p), v.dot(p))).collect();
    let (angle, _) = min_area_angle(&convex_hull_2d(proj));
    let (s, c) = angle.sin_cos();
    [u * c + v * s, -u * s + v * c]
}

/// Returns `(angle, area)` of the minimal-area enclosing rectangle.
fn min_area_angle(hull: &[Vec2]) -> (f64, f64) {
    let area_at = |dir: Vec2| {
        let perp = Vec2::new(-dir.y, dir.x);
        let (mut a0, mut a1, mut b0, mut b1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in hull {
            let a = dir.dot(p);
            let b = perp.dot(p);
            a0 = a0.min(a);
            a1 = a1.max(a);
            b0 = b0.min(b);
            b1 = b1.max(b);
        }
        (a1 - a0) * (b1 - b0)
    };
    let mut best = (0.0, area_at(Vec2::new(1.0, 0.0)));
    if hull.len() < 3 {
        return best;
    }
    for i in 0..hull.len() {
        let e = hull[(i + 1) % hull.len()] - hull[i];
        if e.norm() < 1e-300 {
            continue;
        }
        let e = e.normalize();
        let area = area_at(e);
        if area < best.1 * (1.0 - 1e-12) {
            // fold the edge angle into [0, pi/2)
            let ang = e.y.atan2(e.x).rem_euclid(std::f64::consts::FRAC_PI_2);
            best = (ang, area);
        }
    }
    best
}

/// Fully isotropic covariance: search candidate primary axes for the smallest
/// box volume, world axes first.
fn isotropic_axes(points: &[Vec3]) -> [Vec3; 3] {
    let mut candidates = vec![Vec3::z(), Vec3::x(), Vec3::y()];
    let count = 256;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for i in 0..count {
        let z = 1.0 - (i as f64 + 0.5) / count as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * i as f64;
        candidates.push(Vec3::new(r * phi.cos(), r * phi.sin(), z));
    }
    let mut best: Option<([Vec3; 3], f64)> = None;
    for n in candidates {
        let [a, b] = min_area_in_plane(points, &n);
        let axes = [a, b, n.normalize()];
        let vol = fit_box(points, axes).volume();
        if best.as_ref().is_none_or(|(_, v)| vol < v * (1.0 - 1e-9)) {
            best = Some((axes, vol));
        }
    }
    let axes = best.map(|b| b.0).unwrap_or([Vec3::x(), Vec3::y(), Vec3::z()]);
    // descending extent; world-axis order among ties
    let mut with_extent: Vec<(Vec3, f64)> = axes
        .iter()
        .map(|a| {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let s = a.dot(p);
                (lo.min(s), hi.max(s))
            });
            (*a, hi - lo)
        })
        .collect();
    with_extent.sort_by(|x, y| {
        let tie = (x.1 - y.1).abs() <= 1e-9 * x.1.max(y.1);
        if tie {
            x.0.iamax().cmp(&y.0.iamax())
        } else {
            y.1.total_cmp(&x.1)
        }
    });
    [with_extent[0].0, with_extent[1].0, with_extent[2].0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube_corners() -> Vec<Vec3> {
        let mut v = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    v.push(Vec3::new(x, y, z));
                }
            }
        }
        v
    }

    #[test]
    fn unit_cube() {
        let obb = compute_obb(&cube_corners()).unwrap();
        assert!((obb.center - Vec3::new(0.5, 0.5, 0.5)).norm() < 1e-12);
        for h in obb.half_extents {
            assert!((h - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rotated_cube_keeps_extents() {
        let rot = Pose::from_axis_angle(Vec3::zeros(), Vec3::z(), 30f64.to_radians());
        let pts: Vec<Vec3> = cube_corners().iter().map(|p| rot.transform_point(p)).collect();
        let obb = compute_obb(&pts).unwrap();
        for h in obb.half_extents {
            assert!((h - 0.5).abs() < 1e-6, "{:?}", obb.half_extents);
        }
        // one axis follows the rotated x direction
        let rx = rot.transform_vector(&Vec3::x());
        assert!(obb.axes.iter().any(|a| a.dot(&rx).abs() > 1.0 - 1e-9));
        for p in &pts {
            assert!(obb.contains(p, 1e-9));
        }
    }

    #[test]
    fn ellipsoid_long_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let long = Vec3::new(1.0, 2.0, 0.5).normalize();
        let rot = nalgebra::UnitQuaternion::rotation_between(&Vec3::x(), &long).unwrap();
        let pts: Vec<Vec3> = (0..1000)
            .map(|_| {
                let d = Vec3::new(
                    rng.random_range(-1.0..1.0f64),
                    rng.random_range(-1.0..1.0f64),
                    rng.random_range(-1.0..1.0f64),
                );
                let d = d.normalize();
                rot * Vec3::new(4.0 * d.x, d.y, d.z)
            })
            .collect();
        let obb = compute_obb(&pts).unwrap();
        let angle = obb.axes[0].dot(&long).abs().min(1.0).acos().to_degrees();
        assert!(angle < 5.0, "angle {angle}");
    }

    #[test]
    fn containment_and_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec3> = (0..500)
            .map(|_| Vec3::new(rng.random_range(-1.0..3.0), rng.random_range(0.0..0.5), rng.random_range(-0.2..0.2)))
            .collect();
        let obb = compute_obb(&pts).unwrap();
        for p in &pts {
            assert!(obb.contains(p, 1e-9));
        }
        for i in 0..3 {
            for j in 0..3 {
                let d = obb.axes[i].dot(&obb.axes[j]);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn empty_cloud() {
        assert_eq!(compute_obb(&[]).unwrap_err().kind(), "EmptyInput");
    }

    #[test]
    fn single_point_has_positive_extents() {
        let obb = compute_obb(&[Vec3::new(1.0, 2.0, 3.0)]).unwrap();
        assert!(obb.half_extents.iter().all(|&h| h > 0.0));
    }
}
