//! File formats, corpus tooling, parallel execution and the command line
//! for the `itnn-core` codec and training pipeline.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod curve;
pub mod error;
pub mod exec;
pub mod manifest;
pub mod model;
pub mod pnm;
pub mod records;
pub mod shard;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};
