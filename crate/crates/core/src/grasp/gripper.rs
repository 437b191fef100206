use serde::{Deserialize, Serialize};

use crate::config::{DEFAULT_PATCH_POINTS, TOLERANCES};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::meshing::TriMesh;

/// Planar rectangle in the gripper frame. The rectangle spans local X
/// (`width`) and local Y (`height`); local +Z is the side facing the object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPatch {
    pub width: f64,
    pub height: f64,
    pub pose: Pose,
}

/// Simplified parallel-jaw gripper: two finger pads facing each other across
/// the closing axis plus a palm pad. Finger poses are given fully open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperModel {
    pub left: ContactPatch,
    pub right: ContactPatch,
    pub palm: ContactPatch,
    /// Thickness of the solid block behind the palm pad (m).
    pub palm_depth: f64,
    pub max_opening: f64,
    pub min_opening: f64,
    pub friction: f64,
}

/// Point contact with an inward normal (pointing into the object).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Contact {
    pub fn new(point: Vec3, normal: Vec3) -> Self {
        Self {
            point,
            normal: normal.normalize(),
        }
    }

    pub fn transformed(&self, pose: &Pose) -> Self {
        Self {
            point: pose.transform_point(&self.point),
            normal: pose.transform_vector(&self.normal),
        }
    }
}

impl GripperModel {
    /// Gripper frame: approach along +Z, fingers close along Y. Finger pads
    /// start `finger_offset` in front of the palm and are `finger_length`
    /// long.
    pub fn parallel_jaw(
        pad_width: f64,
        finger_length: f64,
        finger_offset: f64,
        max_opening: f64,
        min_opening: f64,
        friction: f64,
    ) -> Self {
        let zc = finger_offset + finger_length / 2.0;
        let half = max_opening / 2.0;
        GripperModel {
            left: ContactPatch {
                width: pad_width,
                height: finger_length,
                pose: Pose::from_frame(Vec3::new(0.0, half, zc), Vec3::x(), Vec3::z(), -Vec3::y()),
            },
            right: ContactPatch {
                width: pad_width,
                height: finger_length,
                pose: Pose::from_frame(Vec3::new(0.0, -half, zc), Vec3::x(), -Vec3::z(), Vec3::y()),
            },
            palm: ContactPatch {
                width: pad_width,
                height: max_opening,
                pose: Pose::identity(),
            },
            palm_depth: 0.02,
            max_opening,
            min_opening,
            friction,
        }
    }

    /// Dimensions close to a PR2 parallel gripper.
    pub fn pr2() -> Self {
        Self::parallel_jaw(0.02, 0.04, 0.02, 0.09, 0.0, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.min_opening && self.min_opening < self.max_opening) {
            return Err(Error::InvalidArgument(format!(
                "openings must satisfy 0 <= min < max (got {}, {})",
                self.min_opening, self.max_opening
            )));
        }
        if !(self.friction > 0.0) {
            return Err(Error::InvalidArgument("friction coefficient must be positive".into()));
        }
        for p in [&self.left, &self.right, &self.palm] {
            if !(p.width > 0.0 && p.height > 0.0) {
                return Err(Error::InvalidArgument("contact patches need positive size".into()));
            }
        }
        let nl = self.left.pose.z_axis();
        let nr = self.right.pose.z_axis();
        let gap = self.right.pose.position - self.left.pose.position;
        if (nl + nr).norm() > 1e-9 || nl.dot(&gap) <= 0.0 {
            return Err(Error::InvalidArgument("finger pads must be parallel and face each other".into()));
        }
        if ((gap.dot(&nl)) - self.max_opening).abs() > 1e-9 {
            return Err(Error::InvalidArgument("finger pad separation differs from max_opening".into()));
        }
        Ok(())
    }
}

/// Keeps the part of a convex polygon with `n . p <= c`.
fn clip(poly: &[Vec3], n: &Vec3, c: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (da, db) = (n.dot(&a) - c, n.dot(&b) - c);
        if da <= 0.0 {
            out.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            out.push(a + (b - a) * (da / (da - db)));
        }
    }
    out
}

fn clip_box(poly: Vec<Vec3>, lo: &Vec3, hi: &Vec3) -> Vec<Vec3> {
    let mut p = poly;
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = 1.0;
        p = clip(&p, &e, hi[k]);
        if p.is_empty() {
            break;
        }
        p = clip(&p, &-e, -lo[k]);
        if p.is_empty() {
            break;
        }
    }
    p
}

/// Triangles of `mesh` expressed in the local frame of `frame`.
fn local_triangles(mesh: &TriMesh, frame: &Pose) -> Vec<Vec<Vec3>> {
    mesh.triangles
        .iter()
        .map(|t| {
            mesh.corners(t)
                .iter()
                .map(|p| frame.inverse_transform_point(p))
                .collect()
        })
        .collect()
}

/// Where one finger stops and which pad points touch the object.
fn finger_contacts(
    pad: &ContactPatch,
    world_pad: &Pose,
    tris: &[Vec<Vec3>],
    travel: f64,
    which: &str,
) -> Result<Vec<Contact>> {
    let (hw, hh) = (pad.width / 2.0, pad.height / 2.0);
    let tol = TOLERANCES.contact_depth;
    let lo = Vec3::new(-hw, -hh, f64::NEG_INFINITY);
    let hi = Vec3::new(hw, hh, f64::INFINITY);
    let mut first: Option<f64> = None;
    let mut swept = Vec::new();
    for t in tris {
        let p = clip_box(t.clone(), &lo, &hi);
        if p.is_empty() {
            continue;
        }
        let (zmin, zmax) = p
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(q.z), b.max(q.z)));
        if zmin < -tol && zmax > tol {
            return Err(Error::Collision(format!("{which} finger pad starts inside the object")));
        }
        let p = clip(&clip(&p, &-Vec3::z(), 0.0), &Vec3::z(), travel);
        if let Some(z) = p.iter().map(|q| q.z).reduce(f64::min) {
            first = Some(first.map_or(z, |f: f64| f.min(z)));
            swept.push(p);
        }
    }
    let Some(d) = first else {
        return Ok(Vec::new());
    };
    let footprint: Vec<Vec3> = swept
        .iter()
        .flat_map(|p| clip(p, &Vec3::z(), d + tol))
        .collect();
    let mut points: Vec<Vec3> = Vec::with_capacity(DEFAULT_PATCH_POINTS);
    for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
        let best = footprint
            .iter()
            .max_by(|a, b| (sx * a.x + sy * a.y).total_cmp(&(sx * b.x + sy * b.y)))
            .expect("footprint holds the first touch");
        let q = Vec3::new(best.x, best.y, d);
        if !points.iter().any(|p| (p - q).norm() < 1e-12) {
            points.push(q);
        }
    }
    let normal = world_pad.z_axis();
    Ok(points
        .iter()
        .map(|p| Contact::new(world_pad.transform_point(p), normal))
        .collect())
}

/// Closes the gripper at `pose` on `mesh`. Both fingers advance along their
/// pad normals, each stopping at its first touch or at half the minimum
/// opening. Every touching pad yields up to four contacts at the corners of
/// its footprint on the object; no touch gives an empty list.
pub fn close_gripper(gripper: &GripperModel, pose: &Pose, mesh: &TriMesh) -> Result<Vec<Contact>> {
    gripper.validate()?;
    mesh.check_watertight()?;
    let palm = pose.compose(&gripper.palm.pose);
    let (hw, hh) = (gripper.palm.width / 2.0, gripper.palm.height / 2.0);
    let slack = TOLERANCES.contact_depth;
    let lo = Vec3::new(-hw, -hh, -gripper.palm_depth);
    let hi = Vec3::new(hw, hh, -slack);
    if local_triangles(mesh, &palm)
        .into_iter()
        .any(|t| !clip_box(t, &lo, &hi).is_empty())
    {
        return Err(Error::Collision("object intersects the palm volume".into()));
    }
    let travel = (gripper.max_opening - gripper.min_opening) / 2.0;
    let mut contacts = Vec::new();
    for (pad, which) in [(&gripper.left, "left"), (&gripper.right, "right")] {
        let frame = pose.compose(&pad.pose);
        let tris = local_triangles(mesh, &frame);
        contacts.extend(finger_contacts(pad, &frame, &tris, travel, which)?);
    }
    Ok(contacts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshing::box_mesh;

    fn gripper() -> GripperModel {
        GripperModel::parallel_jaw(0.02, 0.04, 0.02, 0.1, 0.0, 0.5)
    }

    /// Cube of side `w` centered between the finger pads.
    fn centered_box(w: f64, y_shift: f64) -> TriMesh {
        let c = Vec3::new(0.0, y_shift, 0.04);
        box_mesh(c - Vec3::repeat(w / 2.0), c + Vec3::repeat(w / 2.0))
    }

    #[test]
    fn pr2_model_is_valid() {
        GripperModel::pr2().validate().unwrap();
        let mut g = gripper();
        g.min_opening = 0.2;
        assert!(g.validate().is_err());
    }

    #[test]
    fn centered_box_gives_antipodal_patches() {
        let c = close_gripper(&gripper(), &Pose::identity(), &centered_box(0.05, 0.0)).unwrap();
        assert_eq!(c.len(), 8);
        let (l, r) = c.split_at(4);
        for k in l {
            assert!((k.point.y - 0.025).abs() < 1e-12);
            assert!((k.normal + Vec3::y()).norm() < 1e-12);
        }
        for k in r {
            assert!((k.point.y + 0.025).abs() < 1e-12);
            assert!((k.normal - Vec3::y()).norm() < 1e-12);
        }
        // footprint is the pad-face overlap: x in [-0.01, 0.01], z in [0.02, 0.06] ∩ [0.015, 0.065]
        let xs: Vec<f64> = l.iter().map(|k| k.point.x).collect();
        let zs: Vec<f64> = l.iter().map(|k| k.point.z).collect();
        assert!(xs.iter().all(|x| (x.abs() - 0.01).abs() < 1e-12));
        assert!(zs.iter().all(|z| (z - 0.02).abs() < 1e-12 || (z - 0.06).abs() < 1e-12));
    }

    #[test]
    fn posed_gripper_matches_transformed_contacts() {
        let pose = Pose::from_axis_angle(Vec3::new(1.0, 2.0, -0.5), Vec3::new(0.2, 1.0, 0.4), 0.9);
        let mesh = centered_box(0.05, 0.0);
        let base = close_gripper(&gripper(), &Pose::identity(), &mesh).unwrap();
        let moved = close_gripper(&gripper(), &pose, &mesh.transformed(&pose)).unwrap();
        assert_eq!(base.len(), moved.len());
        for (a, b) in base.iter().zip(&moved) {
            let t = a.transformed(&pose);
            assert!((t.point - b.point).norm() < 1e-9);
            assert!((t.normal - b.normal).norm() < 1e-9);
        }
    }

    #[test]
    fn gripper_above_object_touches_nothing() {
        let far = box_mesh(Vec3::new(-0.02, -0.02, 0.5), Vec3::new(0.02, 0.02, 0.54));
        assert!(close_gripper(&gripper(), &Pose::identity(), &far).unwrap().is_empty());
    }

    #[test]
    fn offset_object_touches_one_finger() {
        let mut g = gripper();
        g.min_opening = 0.08;
        let c = close_gripper(&g, &Pose::identity(), &centered_box(0.04, 0.03)).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|k| (k.point.y - 0.05).abs() < 1e-12));
    }

    #[test]
    fn collisions() {
        let in_palm = box_mesh(Vec3::new(-0.01, -0.01, -0.01), Vec3::new(0.01, 0.01, 0.01));
        assert_eq!(
            close_gripper(&gripper(), &Pose::identity(), &in_palm).unwrap_err().kind(),
            "Collision"
        );
        let too_wide = centered_box(0.12, 0.0);
        assert_eq!(
            close_gripper(&gripper(), &Pose::identity(), &too_wide).unwrap_err().kind(),
            "Collision"
        );
    }

    #[test]
    fn open_mesh_rejected() {
        let mut m = centered_box(0.05, 0.0);
        m.triangles.pop();
        assert_eq!(
            close_gripper(&gripper(), &Pose::identity(), &m).unwrap_err().kind(),
            "NotWatertight"
        );
    }
}
