//! Attachment surfaces: isosurface extraction from voxel masks, pairing
//! with mesh components and direction/distance filtering.

pub mod filter;
pub mod mask;
pub mod mcubes;

pub use filter::{
    assign_pairs, filter_by_direction, filter_by_distance, group_and_filter, group_and_filter_with,
    nearest_point_direction, AttachmentPair, AttachmentPairing, ComponentSurface, PointDirections,
    DEFAULT_TAU_COS, DEFAULT_TAU_DIST,
};
pub use mask::VoxelMask;
pub use mcubes::isosurface;
