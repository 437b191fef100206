use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{PointCloud, Scaffold};
use crate::error::{Error, Result};
use crate::geometry::{Vec2, Vec3};

/// Result of a shrink-wrap pass; slices that could not be wrapped are left
/// unchanged and reported in `warnings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkWrap {
    pub scaffold: Scaffold,
    pub warnings: Vec<String>,
}

/// Index of the slice owning each point: the one whose plane is nearest.
pub fn assign_slabs(scaffold: &Scaffold, points: &[Vec3]) -> Vec<usize> {
    let planes: Vec<(Vec3, Vec3)> = scaffold
        .slices
        .iter()
        .map(|s| (s.center(), s.normal()))
        .collect();
    points
        .iter()
        .map(|p| {
            planes
                .iter()
                .enumerate()
                .map(|(i, (c, n))| (i, n.dot(&(p - c)).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map_or(0, |(i, _)| i)
        })
        .collect()
}

/// Wraps the external contours of the listed slices around their slab of the
/// cloud. The slice center moves within its plane to the slab centroid, then
/// every external handle is pushed along its direction from the center to the
/// farthest slab point in its angular sector. Handles with empty sectors keep
/// their radius; hole handles keep their world position.
pub fn shrink_wrap(scaffold: &Scaffold, cloud: &PointCloud, slices: &[usize]) -> Result<ShrinkWrap> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("shrink-wrap needs a non-empty point cloud"));
    }
    for &i in slices {
        scaffold.slice(i)?;
    }
    let slabs = assign_slabs(scaffold, &cloud.points);
    let mut out = scaffold.clone();
    let mut warnings = Vec::new();
    for &i in slices {
        let s = &mut out.slices[i];
        let local: Vec<Vec2> = cloud
            .points
            .iter()
            .zip(&slabs)
            .filter(|(_, &k)| k == i)
            .map(|(p, _)| s.plane.to_plane(p).0)
            .collect();
        if local.is_empty() {
            warnings.push(format!("slice {i}: no cloud points in its slab, left unchanged"));
            continue;
        }
        let c = local.iter().sum::<Vec2>() / local.len() as f64;
        let n = s.external.len();
        let half = PI / n as f64;
        let angles: Vec<f64> = local.iter().map(|q| (q.y - c.y).atan2(q.x - c.x)).collect();
        for h in s.external.iter_mut() {
            let d = *h - c;
            let r_old = d.norm();
            let (dir, theta) = if r_old > 0.0 {
                (d / r_old, d.y.atan2(d.x))
            } else {
                (Vec2::x(), 0.0)
            };
            let reach = local
                .iter()
                .zip(&angles)
                .filter(|(_, &a)| angle_gap(a, theta) <= half)
                .map(|(q, _)| (q - c).norm())
                .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
            let r = match reach {
                Some(r) if r > 0.0 => r,
                _ => r_old,
            };
            *h = dir * r;
        }
        if let Some(hole) = s.hole.as_mut() {
            for p in hole.iter_mut() {
                *p -= c;
            }
        }
        let origin = s.plane.to_world(&c);
        s.plane.pose.position = origin;
    }
    out.validate()?;
    Ok(ShrinkWrap {
        scaffold: out,
        warnings,
    })
}

/// Absolute angular difference folded into [0, pi].
fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[cfg(test)]
mod tests {
    use super::super::test_util::{cylinder_cloud, stacked_circles};
    use super::*;
    use crate::scaffold::{insert_scaffold_pov, templates, Primitive};
    use proptest::prelude::*;

    #[test]
    fn cylinder_radius_within_sector_bound() {
        let r = 0.05;
        let cloud = cylinder_cloud(r, 0.3, 64, 31);
        let s = insert_scaffold_pov(&cloud, Vec3::z(), Primitive::Cylinder, 5, 8, 0.5).unwrap();
        let w = shrink_wrap(&s, &cloud, &[0, 1, 2, 3, 4]).unwrap();
        assert!(w.warnings.is_empty());
        let bound = r * (1.0 - (PI / 8.0).cos());
        for sl in &w.scaffold.slices {
            let c = sl.center();
            assert!((c.x.powi(2) + c.y.powi(2)).sqrt() < 1e-12);
            for h in &sl.external {
                assert!((h.norm() - r).abs() <= bound, "{}", h.norm());
            }
        }
    }

    #[test]
    fn empty_sector_keeps_handle() {
        // half-scanned cylinder: only the x > 0 side is present
        let full = cylinder_cloud(0.05, 0.3, 64, 31);
        let half = PointCloud::new(full.points.iter().filter(|p| p.x > 1e-9).cloned().collect());
        let s = stacked_circles(&[0.2, 0.2, 0.2], 8, 0.15);
        let w = shrink_wrap(&s, &half, &[1]).unwrap();
        let before = &s.slices[1];
        let after = &w.scaffold.slices[1];
        // the handle pointing at -X sees no points and keeps its distance
        let c = after.center() - before.center();
        let c2 = Vec2::new(c.x, c.y);
        let old = before.external[4];
        let kept = after.external[4] + c2;
        assert!(((old - c2).norm() - after.external[4].norm()).abs() < 1e-12);
        assert!((kept - old).norm() < 1e-12);
    }

    #[test]
    fn cube_corners_snap() {
        let mut pts = Vec::new();
        for i in 0..=10 {
            for j in 0..=10 {
                for k in 0..=10 {
                    pts.push(Vec3::new(i as f64, j as f64, k as f64) / 10.0 - Vec3::new(0.5, 0.5, 0.0));
                }
            }
        }
        let cloud = PointCloud::new(pts);
        let mut s = stacked_circles(&[1.0, 1.0, 1.0], 4, 0.5);
        let diag = templates::ellipse(4, 1.0, 1.0)
            .iter()
            .map(|p| nalgebra::Rotation2::new(PI / 4.0) * p)
            .collect::<Vec<_>>();
        for sl in &mut s.slices {
            sl.external = diag.clone();
        }
        let w = shrink_wrap(&s, &cloud, &[0, 1, 2]).unwrap();
        for sl in &w.scaffold.slices {
            for h in &sl.external {
                assert!((h.x.abs() - 0.5).abs() < 1e-12 && (h.y.abs() - 0.5).abs() < 1e-12, "{h}");
            }
        }
    }

    #[test]
    fn idempotent_on_noiseless_cloud() {
        let cloud = cylinder_cloud(0.04, 0.2, 48, 21);
        let s = insert_scaffold_pov(&cloud, Vec3::z(), Primitive::Cylinder, 4, 8, 0.5).unwrap();
        let all = [0, 1, 2, 3];
        let once = shrink_wrap(&s, &cloud, &all).unwrap().scaffold;
        let twice = shrink_wrap(&once, &cloud, &all).unwrap().scaffold;
        for (a, b) in once.slices.iter().zip(&twice.slices) {
            assert!((a.center() - b.center()).norm() < 1e-9);
            for (p, q) in a.external.iter().zip(&b.external) {
                assert!((p - q).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_slab_warns() {
        let cloud = PointCloud::new(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.1, 0.0, 0.0)]);
        let s = stacked_circles(&[1.0, 1.0, 1.0], 6, 1.0);
        let w = shrink_wrap(&s, &cloud, &[2]).unwrap();
        assert_eq!(w.warnings.len(), 1);
        assert_eq!(w.scaffold, s);
        assert_eq!(
            shrink_wrap(&s, &PointCloud::default(), &[0]).unwrap_err().kind(),
            "EmptyInput"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]
        #[test]
        fn wrapped_handles_stay_in_order(r in 0.01..0.5f64, n in 3usize..12) {
            let cloud = cylinder_cloud(r, 0.3, 40, 11);
            let s = insert_scaffold_pov(&cloud, Vec3::z(), Primitive::Cylinder, 3, n, 0.5).unwrap();
            let w = shrink_wrap(&s, &cloud, &[0, 1, 2]).unwrap();
            for sl in &w.scaffold.slices {
                prop_assert!(crate::geometry::polygon_signed_area(&sl.external) > 0.0);
                prop_assert!(sl.external.iter().all(|h| h.norm() <= r * (1.0 + 1e-9)));
            }
        }
    }
}
