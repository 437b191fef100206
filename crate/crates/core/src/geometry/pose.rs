use nalgebra::{Quaternion, Rotation3, Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{Vec2, Vec3};
use crate::config::TOLERANCES;
use crate::error::{Error, Result};

/// Rigid 6-DoF pose: a position and a unit quaternion orientation.
///
/// Serialized as `{"position": [x, y, z], "orientation": [w, x, y, z]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    position: [f64; 3],
    orientation: [f64; 4],
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        let q = p.orientation.quaternion();
        PoseRepr {
            position: [p.position.x, p.position.y, p.position.z],
            orientation: [q.w, q.i, q.j, q.k],
        }
    }
}

impl TryFrom<PoseRepr> for Pose {
    type Error = Error;

    fn try_from(r: PoseRepr) -> Result<Self> {
        let [w, x, y, z] = r.orientation;
        Pose::from_wxyz(Vec3::from(r.position), [w, x, y, z])
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn new(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn from_translation(position: Vec3) -> Self {
        Self::new(position, UnitQuaternion::identity())
    }

    pub fn from_axis_angle(position: Vec3, axis: Vec3, angle: f64) -> Self {
        let axis = Unit::new_normalize(axis);
        Self::new(position, UnitQuaternion::from_axis_angle(&axis, angle))
    }

    /// Builds a pose from a raw `(w, x, y, z)` quaternion, which must already
    /// be unit length. The components are kept bit-for-bit.
    pub fn from_wxyz(position: Vec3, wxyz: [f64; 4]) -> Result<Self> {
        let [w, x, y, z] = wxyz;
        let q = Quaternion::new(w, x, y, z);
        if !position.iter().chain(q.coords.iter()).all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("pose has non-finite components".into()));
        }
        if (q.norm() - 1.0).abs() > TOLERANCES.unit_quaternion {
            return Err(Error::InvalidArgument(format!(
                "orientation quaternion has norm {}, expected 1",
                q.norm()
            )));
        }
        Ok(Self::new(position, UnitQuaternion::new_unchecked(q)))
    }

    /// Pose whose local axes are the given orthonormal frame columns.
    pub fn from_frame(position: Vec3, x: Vec3, y: Vec3, z: Vec3) -> Self {
        let m = nalgebra::Matrix3::from_columns(&[x, y, z]);
        let rot = Rotation3::from_matrix_unchecked(m);
        Self::new(position, UnitQuaternion::from_rotation_matrix(&rot))
    }

    pub fn transform_point(&self, v: &Vec3) -> Vec3 {
        self.orientation * v + self.position
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.orientation * v
    }

    pub fn inverse_transform_point(&self, v: &Vec3) -> Vec3 {
        self.orientation.inverse_transform_vector(&(v - self.position))
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.transform_point(&other.position),
            self.orientation * other.orientation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose::new(-(inv * self.position), inv)
    }

    pub fn x_axis(&self) -> Vec3 {
        self.orientation * Vec3::x()
    }

    pub fn y_axis(&self) -> Vec3 {
        self.orientation * Vec3::y()
    }

    pub fn z_axis(&self) -> Vec3 {
        self.orientation * Vec3::z()
    }
}

/// Free function form of [`Pose::transform_point`].
pub fn pose_transform(p: &Pose, v: &Vec3) -> Vec3 {
    p.transform_point(v)
}

pub fn pose_compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn pose_inverse(p: &Pose) -> Pose {
    p.inverse()
}

/// Oriented plane. Origin is the pose position, normal is the local +Z axis and
/// in-plane coordinates run along local +X and +Y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlicePlane {
    pub pose: Pose,
}

impl SlicePlane {
    pub fn new(pose: Pose) -> Self {
        Self { pose }
    }

    /// Plane through `origin` with the given normal; in-plane X follows `x_hint`
    /// projected into the plane (or an arbitrary perpendicular if parallel).
    pub fn from_normal(origin: Vec3, normal: Vec3, x_hint: Vec3) -> Self {
        let z = normal.normalize();
        let mut x = x_hint - z * z.dot(&x_hint);
        if x.norm() < 1e-12 {
            x = any_perpendicular(&z);
        }
        let x = x.normalize();
        let y = z.cross(&x);
        Self::new(Pose::from_frame(origin, x, y, z))
    }

    pub fn origin(&self) -> Vec3 {
        self.pose.position
    }

    pub fn normal(&self) -> Vec3 {
        self.pose.z_axis()
    }

    pub fn to_world(&self, p: &Vec2) -> Vec3 {
        self.pose.transform_point(&Vec3::new(p.x, p.y, 0.0))
    }

    /// In-plane coordinates and signed height above the plane.
    pub fn to_plane(&self, p: &Vec3) -> (Vec2, f64) {
        let local = self.pose.inverse_transform_point(p);
        (Vec2::new(local.x, local.y), local.z)
    }
}

pub fn any_perpendicular(v: &Vec3) -> Vec3 {
    let a = v.abs();
    let other = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    v.cross(&other).normalize()
}
