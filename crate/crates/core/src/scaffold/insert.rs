use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{templates, PointCloud, Scaffold, ScaffoldOrigin, Slice};
use crate::config::TOLERANCES;
use crate::error::{Error, Result};
use crate::geometry::{
    compute_obb, ray_polygon_distance, ClosedSpline, Pose, SlicePlane, Vec2, Vec3,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    Cylinder,
    Box,
}

/// Orthonormal insertion frame: sweep direction plus two cross-section axes.
struct Frame {
    axis: Vec3,
    cross_x: Vec3,
    cross_y: Vec3,
}

fn check_counts(cloud: &PointCloud, n_slices: usize, n_handles: usize) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("point cloud has no points"));
    }
    if n_slices < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 slices, got {n_slices}")));
    }
    if n_handles < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 handles, got {n_handles}")));
    }
    Ok(())
}

/// Inserts a scaffold whose slices run along the dominant axis of the cloud's
/// oriented bounding box.
pub fn insert_scaffold_obb(
    cloud: &PointCloud,
    primitive: Primitive,
    n_slices: usize,
    n_handles: usize,
    tension: f64,
) -> Result<Scaffold> {
    insert_obb_axis(cloud, primitive, n_slices, n_handles, tension, 0)
}

fn insert_obb_axis(
    cloud: &PointCloud,
    primitive: Primitive,
    n_slices: usize,
    n_handles: usize,
    tension: f64,
    axis_index: usize,
) -> Result<Scaffold> {
    check_counts(cloud, n_slices, n_handles)?;
    let obb = compute_obb(&cloud.points)?;
    let axis = obb.axes[axis_index];
    let cross_x = obb.axes[(axis_index + 1) % 3];
    let frame = Frame {
        axis,
        cross_x,
        cross_y: axis.cross(&cross_x),
    };
    let slices = sweep_slices(&cloud.points, &frame, primitive, n_slices, n_handles, tension)?;
    Ok(Scaffold {
        name: cloud.name.clone().unwrap_or_else(|| "scaffold".into()),
        slices,
        tension,
        source_cloud: cloud.name.clone(),
        origin: ScaffoldOrigin::Obb {
            primitive,
            n_handles,
            axis_index,
        },
    })
}

/// Inserts a scaffold swept along the viewing direction; the end slices pass
/// through the nearest and farthest points along that direction.
pub fn insert_scaffold_pov(
    cloud: &PointCloud,
    view_direction: Vec3,
    primitive: Primitive,
    n_slices: usize,
    n_handles: usize,
    tension: f64,
) -> Result<Scaffold> {
    let len = view_direction.norm();
    if !(len > 1e-12) || !len.is_finite() {
        return Err(Error::InvalidArgument("view direction must be nonzero".into()));
    }
    check_counts(cloud, n_slices, n_handles)?;
    let axis = view_direction / len;
    let frame = cross_section_frame(&cloud.points, axis);
    let slices = sweep_slices(&cloud.points, &frame, primitive, n_slices, n_handles, tension)?;
    Ok(Scaffold {
        name: cloud.name.clone().unwrap_or_else(|| "scaffold".into()),
        slices,
        tension,
        source_cloud: cloud.name.clone(),
        origin: ScaffoldOrigin::Pov {
            primitive,
            n_handles,
            view_direction,
        },
    })
}

/// Re-inserts an OBB-derived scaffold along another box axis.
pub fn permute_sweep_axis(scaffold: &Scaffold, cloud: &PointCloud, axis_index: usize) -> Result<Scaffold> {
    if axis_index > 2 {
        return Err(Error::index("sweep axis", axis_index, 3));
    }
    let ScaffoldOrigin::Obb {
        primitive,
        n_handles,
        ..
    } = scaffold.origin
    else {
        return Err(Error::UnsupportedOperation(
            "sweep axis permutation needs a scaffold inserted from a bounding box".into(),
        ));
    };
    let mut out = insert_obb_axis(
        cloud,
        primitive,
        scaffold.slices.len(),
        n_handles,
        scaffold.tension,
        axis_index,
    )?;
    out.name = scaffold.name.clone();
    out.source_cloud = scaffold.source_cloud.clone();
    Ok(out)
}

/// Cross-section axes from the 2-D principal directions of the projected cloud.
fn cross_section_frame(points: &[Vec3], axis: Vec3) -> Frame {
    let u0 = [Vec3::x(), Vec3::y(), Vec3::z()]
        .iter()
        .map(|w| w - axis * axis.dot(w))
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap()
        .normalize();
    let v0 = axis.cross(&u0);
    let n = points.len() as f64;
    let proj: Vec<Vec2> = points.iter().map(|p| Vec2::new(u0.dot(p), v0.dot(p))).collect();
    let mean = proj.iter().sum::<Vec2>() / n;
    let mut cov = Matrix2::zeros();
    for q in &proj {
        let d = q - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let (l0, l1) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    let scale = l0.abs().max(l1.abs()).max(1e-300);
    let cross_x = if (l0 - l1).abs() <= TOLERANCES.eigen_degeneracy * scale {
        u0
    } else {
        let k = if l0 >= l1 { 0 } else { 1 };
        let e = eig.eigenvectors.column(k);
        let mut d = u0 * e[0] + v0 * e[1];
        if d[d.iamax()] < 0.0 {
            d = -d;
        }
        d.normalize()
    };
    Frame {
        axis,
        cross_x,
        cross_y: axis.cross(&cross_x),
    }
}

/// Builds evenly spaced slices along `frame.axis`. Every slice uses the same
/// template ring scaled to enclose the points between its neighbours, so the
/// linearly interpolated contours enclose the whole cloud.
fn sweep_slices(
    points: &[Vec3],
    frame: &Frame,
    primitive: Primitive,
    n_slices: usize,
    n_handles: usize,
    tension: f64,
) -> Result<Vec<Slice>> {
    let coords: Vec<(f64, Vec2)> = points
        .iter()
        .map(|p| (frame.axis.dot(p), Vec2::new(frame.cross_x.dot(p), frame.cross_y.dot(p))))
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut umin, mut umax, mut vmin, mut vmax) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (a, q) in &coords {
        lo = lo.min(*a);
        hi = hi.max(*a);
        umin = umin.min(q.x);
        umax = umax.max(q.x);
        vmin = vmin.min(q.y);
        vmax = vmax.max(q.y);
    }
    let min_len = TOLERANCES.min_slice_separation * (n_slices - 1) as f64;
    if hi - lo < min_len {
        let mid = 0.5 * (lo + hi);
        lo = mid - 0.5 * min_len;
        hi = mid + 0.5 * min_len;
    }
    let center2 = Vec2::new(0.5 * (umin + umax), 0.5 * (vmin + vmax));
    let floor = 0.5 * TOLERANCES.min_slice_separation;
    let hu = (0.5 * (umax - umin)).max(floor);
    let hv = (0.5 * (vmax - vmin)).max(floor);

    let template = match primitive {
        Primitive::Cylinder => templates::ellipse(n_handles, hu, hv),
        Primitive::Box => templates::rectangle(n_handles, hu, hv),
    };
    let dense = ClosedSpline {
        control_points: template.clone(),
        tension,
    }
    .sample(32);

    // scale the template must reach to enclose a cross-section point
    let ratio = |q: &Vec2| -> f64 {
        let d = q - center2;
        let r = d.norm();
        if r == 0.0 {
            return 0.0;
        }
        match ray_polygon_distance(&Vec2::zeros(), &(d / r), &dense) {
            Some(t) if t > 0.0 => r / t,
            _ => 0.0,
        }
    };
    let ratios: Vec<f64> = coords.iter().map(|(_, q)| ratio(q)).collect();
    let global = ratios.iter().cloned().fold(0.0, f64::max);

    let station = |i: usize| lo + (hi - lo) * i as f64 / (n_slices - 1) as f64;
    let margin = 1.0 + 1e-6;
    let mut slices = Vec::with_capacity(n_slices);
    for i in 0..n_slices {
        let a0 = if i == 0 { f64::NEG_INFINITY } else { station(i - 1) };
        let a1 = if i + 1 == n_slices { f64::INFINITY } else { station(i + 1) };
        let local = coords
            .iter()
            .zip(&ratios)
            .filter(|((a, _), _)| *a >= a0 && *a <= a1)
            .map(|(_, r)| *r)
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
        let s = match local {
            Some(s) if s > 0.0 => s,
            _ => global.max(1.0),
        } * margin;
        let origin = frame.axis * station(i) + frame.cross_x * center2.x + frame.cross_y * center2.y;
        let plane = SlicePlane::new(Pose::from_frame(origin, frame.cross_x, frame.cross_y, frame.axis));
        slices.push(Slice::new(plane, template.iter().map(|p| p * s).collect()));
    }
    Ok(slices)
}

#[cfg(test)]
mod tests {
    use super::super::test_util::cylinder_cloud;
    use super::*;
    use crate::geometry::point_in_polygon;
    use crate::scaffold::{assign_slabs, reverse_sweep};

    /// Fraction of cloud points inside the contour interpolated at their axial
    /// position between the two bracketing slices.
    pub(crate) fn containment_rate(s: &Scaffold, cloud: &PointCloud) -> f64 {
        let axis = (s.slices.last().unwrap().center() - s.slices[0].center()).normalize();
        let stations: Vec<f64> = s.slices.iter().map(|sl| axis.dot(&sl.center())).collect();
        let mut inside = 0;
        for p in &cloud.points {
            let a = axis.dot(p);
            let i = stations
                .windows(2)
                .position(|w| a >= w[0].min(w[1]) - 1e-9 && a <= w[0].max(w[1]) + 1e-9)
                .unwrap_or(0);
            let f = ((a - stations[i]) / (stations[i + 1] - stations[i])).clamp(0.0, 1.0);
            let sl = crate::scaffold::interpolate_slices(&s.slices[i], &s.slices[i + 1], f, s.tension);
            let ring = sl.external_spline(s.tension).sample(32);
            let (q, _) = sl.plane.to_plane(p);
            let d = crate::geometry::signed_distance_to_polygon(&q, &ring);
            if point_in_polygon(&q, &ring) || d > -1e-6 {
                inside += 1;
            }
        }
        inside as f64 / cloud.len() as f64
    }

    #[test]
    fn obb_cylinder_insert() {
        let cloud = cylinder_cloud(0.05, 0.3, 48, 31);
        let s = insert_scaffold_obb(&cloud, Primitive::Cylinder, 5, 8, 0.5).unwrap();
        assert_eq!(s.slices.len(), 5);
        for sl in &s.slices {
            let c = sl.center();
            assert!((c.x.powi(2) + c.y.powi(2)).sqrt() < 1e-9, "center {c}");
            for h in &sl.external {
                assert!(h.norm() >= 0.05 - 1e-12);
            }
            assert!((sl.normal().z.abs() - 1.0).abs() < 1e-9);
        }
        let ends: Vec<f64> = [0, 4].iter().map(|&i| s.slices[i].center().z).collect();
        assert!((ends[0].min(ends[1]) - 0.0).abs() < 1e-12);
        assert!((ends[0].max(ends[1]) - 0.3).abs() < 1e-12);
        assert_eq!(containment_rate(&s, &cloud), 1.0);
        s.validate().unwrap();
    }

    #[test]
    fn box_insert_encloses_cube() {
        let mut pts = Vec::new();
        for i in 0..=6 {
            for j in 0..=6 {
                for k in 0..=6 {
                    pts.push(Vec3::new(i as f64, j as f64 * 0.9, k as f64 * 0.8) / 6.0);
                }
            }
        }
        let cloud = PointCloud::new(pts);
        let s = insert_scaffold_obb(&cloud, Primitive::Box, 3, 4, 0.5).unwrap();
        for sl in &s.slices {
            let xs: Vec<f64> = sl.external.iter().map(|p| p.x.abs()).collect();
            let ys: Vec<f64> = sl.external.iter().map(|p| p.y.abs()).collect();
            assert!(xs.iter().all(|&x| x >= 0.4 - 1e-12));
            assert!(ys.iter().all(|&y| y >= 0.4 - 1e-12));
        }
        assert_eq!(containment_rate(&s, &cloud), 1.0);
    }

    #[test]
    fn obb_insert_is_rigidly_equivariant() {
        let cloud = cylinder_cloud(0.05, 0.3, 40, 25);
        let pose = Pose::from_axis_angle(Vec3::new(0.4, -1.0, 2.0), Vec3::new(1.0, 1.0, 0.3), 0.9);
        let moved = PointCloud::new(cloud.points.iter().map(|p| pose.transform_point(p)).collect());
        let a = insert_scaffold_obb(&cloud, Primitive::Cylinder, 4, 8, 0.5).unwrap();
        let b = insert_scaffold_obb(&moved, Primitive::Cylinder, 4, 8, 0.5).unwrap();
        assert_eq!(containment_rate(&b, &moved), 1.0);
        // slice centres map onto each other up to sweep direction
        let ca: Vec<Vec3> = a.sweep_axis().iter().map(|c| pose.transform_point(c)).collect();
        let cb = b.sweep_axis();
        let fwd = ca.iter().zip(&cb).all(|(p, q)| (p - q).norm() < 1e-6);
        let rev = ca.iter().zip(cb.iter().rev()).all(|(p, q)| (p - q).norm() < 1e-6);
        assert!(fwd || rev);
    }

    #[test]
    fn pov_insert_end_planes() {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..40 {
                let th = std::f64::consts::PI * (i as f64 + 0.5) / 20.0;
                let ph = std::f64::consts::TAU * j as f64 / 40.0;
                pts.push(Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()) * 0.04);
            }
        }
        let cloud = PointCloud::new(pts);
        let (zmin, zmax) = cloud
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.z), b.max(p.z)));
        let s = insert_scaffold_pov(&cloud, Vec3::new(0.0, 0.0, 2.0), Primitive::Cylinder, 6, 12, 0.5).unwrap();
        assert!((s.slices[0].center().z - zmin).abs() < 1e-12);
        assert!((s.slices[5].center().z - zmax).abs() < 1e-12);
        for sl in &s.slices {
            assert!((sl.normal() - Vec3::z()).norm() < 1e-12);
        }
        assert!(containment_rate(&s, &cloud) >= 0.99);
        let slabs = assign_slabs(&s, &cloud.points);
        assert_eq!(slabs.len(), cloud.len());
    }

    #[test]
    fn pov_matches_obb_for_bat() {
        let cloud = cylinder_cloud(0.03, 0.8, 32, 40);
        let axis = Vec3::new(0.0, 0.0, 1.0);
        let a = insert_scaffold_obb(&cloud, Primitive::Cylinder, 5, 8, 0.5).unwrap();
        let b = insert_scaffold_pov(&cloud, axis, Primitive::Cylinder, 5, 8, 0.5).unwrap();
        let dir = |s: &Scaffold| (s.slices[4].center() - s.slices[0].center()).normalize();
        let angle = dir(&a).dot(&dir(&b)).abs().min(1.0).acos().to_degrees();
        assert!(angle < 5.0);
        let b = if dir(&a).dot(&dir(&b)) < 0.0 { reverse_sweep(&b) } else { b };
        for (p, q) in a.sweep_axis().iter().zip(b.sweep_axis()) {
            assert!((p - q).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_view_direction() {
        let cloud = cylinder_cloud(0.03, 0.8, 8, 4);
        let e = insert_scaffold_pov(&cloud, Vec3::zeros(), Primitive::Box, 3, 4, 0.5).unwrap_err();
        assert_eq!(e.kind(), "InvalidArgument");
    }

    #[test]
    fn insertion_errors() {
        let empty = PointCloud::default();
        assert_eq!(
            insert_scaffold_obb(&empty, Primitive::Box, 3, 4, 0.5).unwrap_err().kind(),
            "EmptyInput"
        );
        let cloud = cylinder_cloud(0.03, 0.8, 8, 4);
        assert!(insert_scaffold_obb(&cloud, Primitive::Box, 3, 2, 0.5).is_err());
    }

    #[test]
    fn flat_cloud_gets_separated_slices() {
        let cloud = PointCloud::new(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ]);
        let s = insert_scaffold_pov(&cloud, Vec3::z(), Primitive::Box, 3, 4, 0.5).unwrap();
        s.validate().unwrap();
        let len = (s.slices[2].center() - s.slices[0].center()).norm();
        assert!((len - 2e-6).abs() < 1e-12);
    }

    #[test]
    fn permute_to_minor_axis() {
        // elliptic cross-section so the box axes are distinct
        let mut pts = Vec::new();
        for j in 0..30 {
            for k in 0..40 {
                let t = std::f64::consts::TAU * k as f64 / 40.0;
                pts.push(Vec3::new(0.06 * t.cos(), 0.03 * t.sin(), 0.3 * j as f64 / 29.0));
            }
        }
        let cloud = PointCloud::new(pts);
        let s = insert_scaffold_obb(&cloud, Primitive::Cylinder, 5, 8, 0.5).unwrap();
        let p = permute_sweep_axis(&s, &cloud, 2).unwrap();
        assert_eq!(p.slices.len(), 5);
        let len = (p.slices[4].center() - p.slices[0].center()).norm();
        assert!((len - 0.06).abs() < 1e-9, "sweep length {len}");
        assert_eq!(permute_sweep_axis(&s, &cloud, 3).unwrap_err().kind(), "IndexOutOfRange");
        let pov = insert_scaffold_pov(&cloud, Vec3::z(), Primitive::Cylinder, 5, 8, 0.5).unwrap();
        assert_eq!(permute_sweep_axis(&pov, &cloud, 1).unwrap_err().kind(), "UnsupportedOperation");
    }
}
