use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lerp3, triangle_area, Pose, Vec3};
use crate::scaffold::Scaffold;

/// Frame a grasp annotation's poses are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspFrame {
    /// Point-cloud coordinate origin, standing in for the robot's viewpoint.
    Sensor,
    /// Plane of the first slice of the object's scaffold.
    ScaffoldBase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspOutcome {
    Miss,
    Slip,
    Shift,
    Good,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalGrade {
    Impossible,
    Flawed,
    Good,
}

/// Human-assigned grades kept with an annotation. Nothing computes these.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationLabels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<GraspOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalGrade>,
    /// Free-form scales such as collision, configuration, handling, path or
    /// challenge ratings.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scales: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspAnnotation {
    pub id: String,
    /// Scaffold or cloud the grasp refers to.
    pub object: String,
    pub grasp_pose: Pose,
    pub pre_grasp: Pose,
    pub frame: GraspFrame,
    #[serde(default)]
    pub labels: AnnotationLabels,
}

/// Base frame of a scaffold: the first slice's plane, origin at its center.
pub fn scaffold_base_frame(scaffold: &Scaffold) -> Result<Pose> {
    scaffold
        .slices
        .first()
        .map(|s| s.plane.pose)
        .ok_or(Error::EmptyInput("scaffold has no slices"))
}

impl GraspAnnotation {
    /// Stores world-frame poses relative to `frame`. `ScaffoldBase` needs the
    /// scaffold.
    pub fn from_world(
        id: impl Into<String>,
        object: impl Into<String>,
        grasp: Pose,
        pre_grasp: Pose,
        frame: GraspFrame,
        scaffold: Option<&Scaffold>,
    ) -> Result<Self> {
        let base = frame_pose(frame, scaffold)?.inverse();
        Ok(Self {
            id: id.into(),
            object: object.into(),
            grasp_pose: base.compose(&grasp),
            pre_grasp: base.compose(&pre_grasp),
            frame,
            labels: AnnotationLabels::default(),
        })
    }

    /// Grasp and pre-grasp poses in world (sensor) coordinates.
    pub fn world_poses(&self, scaffold: Option<&Scaffold>) -> Result<(Pose, Pose)> {
        let base = frame_pose(self.frame, scaffold)?;
        Ok((base.compose(&self.grasp_pose), base.compose(&self.pre_grasp)))
    }

    /// Unit vector from the pre-grasp to the grasp position, if they differ.
    pub fn approach_vector(&self) -> Option<Vec3> {
        let d = self.grasp_pose.position - self.pre_grasp.position;
        (d.norm() > 0.0).then(|| d.normalize())
    }
}

fn frame_pose(frame: GraspFrame, scaffold: Option<&Scaffold>) -> Result<Pose> {
    match frame {
        GraspFrame::Sensor => Ok(Pose::identity()),
        GraspFrame::ScaffoldBase => scaffold_base_frame(scaffold.ok_or_else(|| {
            Error::InvalidArgument("scaffold-base frame needs the object scaffold".into())
        })?),
    }
}

/// Gripper poses for one handling task: pre-pose, grasp pose, then any
/// number of handling waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPath {
    pub id: String,
    pub object: String,
    pub poses: Vec<Pose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Vec<f64>>,
    /// World pose of the object when it is grasped.
    pub object_pose: Pose,
}

pub const GRASP_INDEX: usize = 1;

impl WaypointPath {
    pub fn new(
        id: impl Into<String>,
        object: impl Into<String>,
        pre: Pose,
        grasp: Pose,
        object_pose: Pose,
    ) -> Self {
        Self {
            id: id.into(),
            object: object.into(),
            poses: vec![pre, grasp],
            timestamps: None,
            object_pose,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.poses.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a path needs a pre-pose and a grasp pose, got {} poses",
                self.poses.len()
            )));
        }
        if let Some(t) = &self.timestamps {
            if t.len() != self.poses.len() {
                return Err(Error::InvalidArgument("one timestamp per pose expected".into()));
            }
            if t.windows(2).any(|w| !(w[1] >= w[0])) {
                return Err(Error::InvalidArgument("timestamps must not decrease".into()));
            }
        }
        Ok(())
    }

    pub fn record(&mut self, pose: Pose) {
        self.poses.push(pose);
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.poses.iter().map(|p| p.position).collect()
    }

    /// Object pose relative to the gripper, fixed at the grasp waypoint.
    pub fn object_in_gripper(&self) -> Result<Pose> {
        self.validate()?;
        Ok(self.poses[GRASP_INDEX].inverse().compose(&self.object_pose))
    }
}

/// Where the grasped object sits when the gripper is at waypoint `index`.
pub fn ghost_pose(path: &WaypointPath, index: usize) -> Result<Pose> {
    let rel = path.object_in_gripper()?;
    let at = path
        .poses
        .get(index)
        .ok_or_else(|| Error::index("waypoint", index, path.poses.len()))?;
    Ok(at.compose(&rel))
}

/// Sum of straight-line distances between consecutive waypoint positions.
pub fn path_length(points: &[Vec3]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "path length needs at least 2 poses, got {}",
            points.len()
        )));
    }
    Ok(points.windows(2).map(|w| (w[1] - w[0]).norm()).sum())
}

/// `n` points evenly spaced by arc length, endpoints included. A zero-length
/// polyline collapses to copies of its first point.
pub fn resample_polyline(points: &[Vec3], n: usize) -> Result<Vec<Vec3>> {
    if points.is_empty() {
        return Err(Error::EmptyInput("polyline has no points"));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("resample count {n} must be at least 2")));
    }
    let mut cum = vec![0.0];
    for w in points.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    if !(total > 0.0) {
        return Ok(vec![points[0]; n]);
    }
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                return points[points.len() - 1];
            }
            let s = total * i as f64 / (n - 1) as f64;
            let k = cum.partition_point(|&c| c <= s).clamp(1, cum.len() - 1) - 1;
            let seg = cum[k + 1] - cum[k];
            if seg > 0.0 {
                lerp3(&points[k], &points[k + 1], (s - cum[k]) / seg)
            } else {
                points[k]
            }
        })
        .collect())
}

/// Area swept between two paths. Both are resampled to `n` points by arc
/// length; each quad between matching samples is split along both diagonals
/// and the two triangulations averaged, which makes the result symmetric in
/// its arguments and exact for planar quads.
pub fn ribbon_area(a: &[Vec3], b: &[Vec3], n: usize) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument("ribbon area needs paths of at least 2 poses".into()));
    }
    let a = resample_polyline(a, n)?;
    let b = resample_polyline(b, n)?;
    let mut sum = 0.0;
    for i in 0..n - 1 {
        let one = triangle_area(&a[i], &a[i + 1], &b[i]) + triangle_area(&b[i], &a[i + 1], &b[i + 1]);
        let two = triangle_area(&a[i], &a[i + 1], &b[i + 1]) + triangle_area(&a[i], &b[i + 1], &b[i]);
        sum += 0.5 * (one + two);
    }
    Ok(sum)
}

/// [`ribbon_area`] between the waypoint positions of two paths.
pub fn path_ribbon_area(a: &WaypointPath, b: &WaypointPath, n: usize) -> Result<f64> {
    ribbon_area(&a.positions(), &b.positions(), n)
}
