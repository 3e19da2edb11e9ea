//! Dimension reduction of thin films glued through a periodic sieve of holes.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cell;
pub mod cli;
pub mod energy;
pub mod error;
pub mod mesh;
pub mod par;
pub mod regime;
pub mod solver;

pub use error::{Error, Result};
