//! Mesh data model: volumetric hex/tet meshes, triangle surfaces and
//! labeled pointclouds.

pub mod points;
pub mod surface;
pub mod thickness;
pub mod volumetric;

pub use points::{base_surface_points, base_vertex_ids, LabeledPointCloud};
pub use surface::{
    base_surface, connected_components, extract_boundary_surface, vertex_normals, SurfaceMesh,
};
pub use thickness::{stack_thickness, thickness_directions};
pub use volumetric::{BaseFace, Cell, CellKind, VolumetricMesh};
