//! Distance losses: one-sided and class-wise chamfer, attachment pull.

pub mod chamfer;
pub mod nn;

pub use chamfer::{
    attachment_pull_loss, classwise_chamfer, sided_chamfer, sided_chamfer_indexed, SidedChamfer,
};
pub use nn::{brute_force_nearest, NearestNeighborIndex, Neighbor};
