// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attach;
pub mod energy;
pub mod error;
pub mod field;
pub mod geom;
pub mod io;
pub mod loss;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod scene;

pub use error::{Error, Result};
pub use geom::{Mat3, Vec3};
