//! Deformation parameterization: control-grid velocities, cubic b-spline
//! densification, scaling-and-squaring integration and vertex sampling.

pub mod bspline;
pub mod deform;
pub mod grid;
pub mod sample;
pub mod svf;

pub use bspline::{cubic_weights, densify_bspline, Densifier};
pub use deform::{
    deform_mesh, deform_mesh_on, lattice_within, Deformation, DeformationModel, DEFAULT_DENSE_SPACING,
    DEFAULT_MARGIN, DEFAULT_STEPS,
};
pub use grid::{ControlGrid, DenseField, Lattice};
pub use sample::{sample_displacements, Sampler};
pub use svf::{integrate, integrate_adjoint, scaling_and_squaring, SquaringTape};
