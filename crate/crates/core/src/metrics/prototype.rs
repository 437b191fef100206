use nalgebra::UnitQuaternion;

use crate::error::{Error, Result};
use crate::geometry::{Pose, SlicePlane, Vec2, Vec3};
use crate::scaffold::{resample_scaffold, PartAssembly, Scaffold, ScaffoldOrigin, Slice};

/// Rigid (optionally similarity) map taking `from`'s sweep endpoints onto
/// `to`'s: midpoints coincide and the endpoint chords are made parallel by
/// the smallest rotation. No reflection is ever introduced.
fn endpoint_alignment(from: &Scaffold, to: &Scaffold, allow_scale: bool) -> (Pose, f64) {
    let ends = |s: &Scaffold| (s.slices[0].center(), s.slices[s.slices.len() - 1].center());
    let (p0, p1) = ends(from);
    let (q0, q1) = ends(to);
    let (dp, dq) = (p1 - p0, q1 - q0);
    let rot = if dp.norm() > 1e-12 && dq.norm() > 1e-12 {
        UnitQuaternion::rotation_between(&dp, &dq).unwrap_or_else(|| {
            // antiparallel chords: half turn about any perpendicular axis
            let axis = crate::geometry::any_perpendicular(&dp);
            UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), std::f64::consts::PI)
        })
    } else {
        UnitQuaternion::identity()
    };
    let scale = if allow_scale && dp.norm() > 1e-12 {
        dq.norm() / dp.norm()
    } else {
        1.0
    };
    let pm = (p0 + p1) * 0.5;
    let qm = (q0 + q1) * 0.5;
    (Pose::new(qm - rot * (pm * scale), rot), scale)
}

fn apply_alignment(s: &Scaffold, pose: &Pose, scale: f64) -> Scaffold {
    let mut out = s.clone();
    for sl in &mut out.slices {
        let c = sl.center() * scale;
        sl.plane = SlicePlane::new(Pose::new(
            pose.transform_point(&c),
            pose.orientation * sl.plane.pose.orientation,
        ));
        for p in sl.external.iter_mut().chain(sl.hole.iter_mut().flatten()) {
            *p *= scale;
        }
    }
    out
}

fn mean3(v: impl Iterator<Item = Vec3>) -> Vec3 {
    let (sum, n) = v.fold((Vec3::zeros(), 0usize), |(s, n), p| (s + p, n + 1));
    sum / n as f64
}

/// Mean-shape scaffold of several annotations of the same part.
///
/// Every input is resampled to `target_slices` stations by `target_handles`
/// handles and aligned to the first input by its sweep endpoints. Each output
/// station then averages slice centers, normals and world handle positions.
/// A station keeps a hole when a strict majority of inputs have one there.
pub fn prototype_scaffold(
    scaffolds: &[Scaffold],
    target_slices: usize,
    target_handles: usize,
    allow_scale: bool,
) -> Result<Scaffold> {
    let first = scaffolds
        .first()
        .ok_or(Error::EmptyInput("no scaffolds to merge"))?;
    let reference = resample_scaffold(first, target_slices, target_handles)?;
    let mut aligned = vec![reference.clone()];
    for s in &scaffolds[1..] {
        let r = resample_scaffold(s, target_slices, target_handles)?;
        let (pose, scale) = endpoint_alignment(&r, &reference, allow_scale);
        aligned.push(apply_alignment(&r, &pose, scale));
    }
    let n = aligned.len();
    let mut slices = Vec::with_capacity(target_slices);
    for j in 0..target_slices {
        let stations: Vec<&Slice> = aligned.iter().map(|s| &s.slices[j]).collect();
        let center = mean3(stations.iter().map(|s| s.center()));
        let normal = mean3(stations.iter().map(|s| s.normal()));
        let normal = if normal.norm() > 1e-12 {
            normal
        } else {
            stations[0].normal()
        };
        let x_hint = mean3(stations.iter().map(|s| s.plane.pose.x_axis()));
        let plane = SlicePlane::from_normal(center, normal, x_hint);
        let mean_ring = |rings: &[(&SlicePlane, &Vec<Vec2>)]| -> Vec<Vec2> {
            (0..target_handles)
                .map(|k| {
                    let w = mean3(rings.iter().map(|(pl, r)| pl.to_world(&r[k])));
                    plane.to_plane(&w).0
                })
                .collect()
        };
        let ext: Vec<_> = stations.iter().map(|s| (&s.plane, &s.external)).collect();
        let holes: Vec<_> = stations
            .iter()
            .filter_map(|s| s.hole.as_ref().map(|h| (&s.plane, h)))
            .collect();
        let mut slice = Slice::new(plane, mean_ring(&ext));
        if 2 * holes.len() > n {
            slice.hole = Some(mean_ring(&holes));
        }
        slices.push(slice);
    }
    let out = Scaffold {
        name: format!("{}-prototype", first.name),
        slices,
        tension: first.tension,
        source_cloud: None,
        origin: ScaffoldOrigin::Manual,
    };
    out.validate()?;
    Ok(out)
}

/// Part-wise [`prototype_scaffold`] over assemblies with equal part counts.
pub fn prototype_assembly(
    assemblies: &[PartAssembly],
    target_slices: usize,
    target_handles: usize,
    allow_scale: bool,
) -> Result<PartAssembly> {
    let first = assemblies
        .first()
        .ok_or(Error::EmptyInput("no assemblies to merge"))?;
    let parts = first.parts.len();
    if let Some(bad) = assemblies.iter().find(|a| a.parts.len() != parts) {
        return Err(Error::InvalidArgument(format!(
            "mixed part counts: {} has {} parts, expected {parts}",
            bad.name,
            bad.parts.len()
        )));
    }
    let merged = (0..parts)
        .map(|i| {
            let group: Vec<Scaffold> = assemblies.iter().map(|a| a.parts[i].clone()).collect();
            prototype_scaffold(&group, target_slices, target_handles, allow_scale).map_err(|e| Error::Part {
                part: first.parts[i].name.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PartAssembly::new(format!("{}-prototype", first.name), merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaffold::{add_hole, transform_scaffold};
    use crate::scaffold::test_util::stacked_circles;

    fn radii(s: &Scaffold) -> Vec<f64> {
        s.slices
            .iter()
            .flat_map(|sl| sl.external.iter().map(|p| p.norm()))
            .collect()
    }

    #[test]
    fn identical_inputs_are_a_fixed_point() {
        let s = stacked_circles(&[1.0, 1.2, 0.9], 12, 0.5);
        let expect = resample_scaffold(&s, 5, 12).unwrap();
        let p = prototype_scaffold(&[s.clone(), s.clone(), s], 5, 12, false).unwrap();
        for (a, b) in p.slices.iter().zip(&expect.slices) {
            assert!((a.center() - b.center()).norm() < 1e-9);
            assert!((a.normal() - b.normal()).norm() < 1e-9);
            for (pa, pb) in a.external.iter().zip(&b.external) {
                assert!((a.plane.to_world(pa) - b.plane.to_world(pb)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn mean_of_two_cylinders() {
        let a = stacked_circles(&[1.0, 1.0], 16, 2.0);
        let b = stacked_circles(&[3.0, 3.0], 16, 2.0);
        let p = prototype_scaffold(&[a, b], 4, 16, false).unwrap();
        for r in radii(&p) {
            assert!((r - 2.0).abs() < 1e-3, "{r}");
        }
    }

    #[test]
    fn alignment_removes_rigid_motion() {
        let a = stacked_circles(&[1.0, 1.0, 1.0], 16, 1.0);
        let moved = transform_scaffold(
            &stacked_circles(&[3.0, 3.0, 3.0], 16, 1.0),
            &Pose::from_axis_angle(Vec3::new(5.0, -2.0, 1.0), Vec3::new(1.0, 1.0, 0.0), 0.8),
            1.0,
        )
        .unwrap();
        let p = prototype_scaffold(&[a, moved], 3, 16, false).unwrap();
        for (sl, z) in p.slices.iter().zip([0.0, 1.0, 2.0]) {
            assert!((sl.center() - Vec3::new(0.0, 0.0, z)).norm() < 1e-9);
            assert!((sl.normal() - Vec3::z()).norm() < 1e-9);
        }
        for r in radii(&p) {
            assert!((r - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn scale_toggle() {
        let a = stacked_circles(&[1.0, 1.0], 8, 1.0);
        let b = stacked_circles(&[2.0, 2.0], 8, 2.0);
        let p = prototype_scaffold(&[a.clone(), b.clone()], 2, 8, true).unwrap();
        for r in radii(&p) {
            assert!((r - 1.0).abs() < 1e-9);
        }
        let q = prototype_scaffold(&[a, b], 2, 8, false).unwrap();
        for r in radii(&q) {
            assert!((r - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn hole_majority() {
        let plain = stacked_circles(&[1.0, 1.0, 1.0], 12, 1.0);
        let holed = add_hole(&plain, &[0, 1, 2], 12, 0.5).unwrap();
        let two = prototype_scaffold(&[holed.clone(), holed.clone(), plain.clone()], 3, 12, false).unwrap();
        assert!(two.slices.iter().all(|s| s.hole.is_some()));
        let one = prototype_scaffold(&[holed.clone(), plain.clone(), plain.clone()], 3, 12, false).unwrap();
        assert!(one.slices.iter().all(|s| s.hole.is_none()));
        let tie = prototype_scaffold(&[holed, plain], 3, 12, false).unwrap();
        assert!(tie.slices.iter().all(|s| s.hole.is_none()));
    }

    #[test]
    fn errors() {
        assert_eq!(prototype_scaffold(&[], 3, 8, false).unwrap_err().kind(), "EmptyInput");
        let s = stacked_circles(&[1.0, 1.0], 8, 1.0);
        let one = PartAssembly::single(s.clone());
        let two = PartAssembly::new("two", vec![s.clone(), s]).unwrap();
        assert_eq!(
            prototype_assembly(&[one.clone(), two], 3, 8, false).unwrap_err().kind(),
            "InvalidArgument"
        );
        assert_eq!(prototype_assembly(&[one.clone(), one], 3, 8, false).unwrap().parts.len(), 1);
    }
}
