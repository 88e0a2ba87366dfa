//! Synthetic scenes standing in for clinical data.

pub mod primitives;
pub mod synthetic;

pub use synthetic::{calcified_tube, generate, slab_wave, tube_bulge, CalcifiedParams, Scene, SceneKind, SceneManifest};
