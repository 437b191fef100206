//! Parallel-jaw gripper contacts, grasp wrench space quality, grasp
//! annotations and waypoint paths.

mod gripper;
mod path;
mod quality;

pub use gripper::{close_gripper, Contact, ContactPatch, GripperModel};
pub use path::{
    ghost_pose, path_length, path_ribbon_area, resample_polyline, ribbon_area, scaffold_base_frame,
    AnnotationLabels, FunctionalGrade, GraspAnnotation, GraspFrame, GraspOutcome, WaypointPath,
    GRASP_INDEX,
};
pub use quality::{
    contact_wrenches, evaluate_grasp, grasp_quality, halton_directions, hull_measures,
    interior_margin, is_force_closure, sampled_epsilon, GraspQuality, Wrench,
};
