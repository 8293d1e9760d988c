//! Weakly supervised construction of a probabilistic knowledge graph from maritime
//! incident reports.

pub mod candidates;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod inference;
pub mod io;
pub mod kgraph;
pub mod mentions;
pub mod pipeline;
pub mod supervision;
pub mod synth;

pub use error::{Error, Result};
