//! Graphical join: computes a run-length-encoded summary of an n-way
//! equi-join from per-table frequency potentials, without materializing the
//! join, and expands it back into the flat result on demand.

pub mod cache;
pub mod domain;
pub mod error;
pub mod factor;
pub mod fixtures;
pub mod gfjs;
pub mod graph;
pub mod inference;
pub mod oracle;
pub mod pipeline;
pub mod query;
pub mod relation;
pub mod verify;

pub use error::{Error, Result};
