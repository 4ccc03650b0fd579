pub mod error;
pub mod experiments;
pub mod hin;
pub mod classify;
pub mod combine;
pub mod config;
pub mod ingest;
pub mod metapath;
pub mod pipeline;
pub mod prune;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
