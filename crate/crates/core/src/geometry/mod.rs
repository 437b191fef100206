//! Vectors, rigid poses, planes, closed interpolating splines and
//! PCA-oriented bounding boxes.

mod obb;
mod polygon;
mod pose;
mod spline;

pub use obb::{compute_obb, OrientedBoundingBox};
pub use polygon::{
    point_in_polygon, polygon_area_centroid, polygon_is_simple, polygon_signed_area,
    ray_polygon_distance, segment_distance_2d, signed_distance_to_polygon,
};
pub use pose::{any_perpendicular, pose_compose, pose_inverse, pose_transform, Pose, SlicePlane};
pub use spline::{sample_closed_spline, ClosedSpline};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub(crate) fn lerp3(a: &Vec3, b: &Vec3, t: f64) -> Vec3 {
    a + (b - a) * t
}

pub(crate) fn lerp2(a: &Vec2, b: &Vec2, t: f64) -> Vec2 {
    a + (b - a) * t
}

pub(crate) fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}
