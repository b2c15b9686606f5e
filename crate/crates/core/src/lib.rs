//! Curving of straight-sided tetrahedral meshes into high-order meshes.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod accuracy;
pub mod distortion;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod objective;
pub mod solver;

pub use error::{Error, Result};
