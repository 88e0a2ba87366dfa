//! Regularization energies: volumetric strain, control-field bending and
//! surface regularizers.

pub mod bending;
pub mod kinematics;
pub mod strain;
pub mod surface;

pub use bending::bending_energy;
pub use kinematics::{deformation_gradient, polar_rotation, CellKinematics, RestShape};
pub use strain::{strain_energy, EnergyWeights, StrainEnergy};
pub use surface::{
    edge_correspondence_loss, laplacian_loss, normal_consistency_loss, EdgeSet, SurfaceTopology,
};
