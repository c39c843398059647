//! Context-aware placement of instruction labels on the surfaces of
//! physical objects.
//!
//! A [`profile::SpatialProfile`] describes the objects and their gridded
//! anchoring surfaces, a [`profile::DocumentProfile`] holds the instruction
//! steps, and a [`context::Trace`] records where the user looked and what
//! their hands did. [`optimizer::optimize`] picks the cell that minimizes the
//! weighted cost in [`cost`]; [`harness`] wires it all into commands.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod api;
pub mod context;
pub mod cost;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod importance;
pub mod optimizer;
pub mod profile;
pub mod scenes;
pub mod tagging;

pub use error::{Error, Result};
