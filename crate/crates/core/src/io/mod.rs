//! Reading and writing clouds, meshes and project documents, plus screen
//! space point selection.

mod cloud;
mod mesh;
mod project;
mod select;

pub use cloud::{load_cloud, parse_cloud, parse_pcd, parse_ply_cloud, parse_xyz, write_xyz, CloudFormat, CloudLoad};
pub use mesh::{
    export_mesh, import_mesh, parse_mesh, parse_obj, parse_ply_mesh, parse_stl, write_mesh, write_obj, write_ply,
    write_stl, MeshFormat,
};
pub use project::{
    load_project, load_reports, save_project, save_reports, AssemblyItem, CloudItem, EvaluationReport, GraspItem,
    ItemFlags, PathItem, ProjectDocument, FORMAT_VERSION,
};
pub use select::{paint_cloud, select_points, Camera, Projection};
