//! Joint first/third-person frame embeddings learned with a per-video sample
//! selector and importance-weighted triplet loss.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
mod error;
pub mod evaluation;
pub mod io;
pub mod math;
pub mod model;
pub mod objective;
pub mod sampling;
pub mod selector;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
