//! Sweep-based annotation scaffolds for point clouds.
//!
//! A scaffold is an ordered sequence of planar slices, each carrying a closed
//! interpolating spline contour (and optionally a hole contour), connected
//! along a sweep axis. This crate builds scaffolds from point clouds, edits
//! them, turns them into watertight meshes, measures those meshes against
//! reference shapes, and scores grasps and manipulation paths annotated
//! relative to them.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod geometry;
pub mod grasp;
pub mod io;
pub mod meshing;
pub mod metrics;
pub mod scaffold;
pub mod session;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{ClosedSpline, OrientedBoundingBox, Pose, SlicePlane, Vec2, Vec3};
