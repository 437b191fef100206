//! Mass properties, shape-error metrics against an ideal mesh, and
//! mean-shape merging of several scaffolds.

mod mass;
mod prototype;
mod shape;

pub use mass::{
    assembly_mass_properties, combine, mass_properties, point_inside, AssemblyMass, MassProperties,
};
pub use prototype::{prototype_assembly, prototype_scaffold};
pub use shape::{
    efficiency, hausdorff, report_from_parts, shape_errors, tensor_norm, HausdorffDistances,
    ShapeErrorReport, TensorNorm, MIN_SHAPE_SAMPLES,
};
