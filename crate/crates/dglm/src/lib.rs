//! File formats, parallel aggregation and the command-line front end for
//! [`dglm_core`].
//!
//! * [`config`]: `key = value` simulation configs.
//! * [`tables`]: per-round and per-metric CSV tables.
//! * [`checkpoint`]: binary belief snapshots for resuming a filter.
//! * [`harness`]: repetition-parallel simulation.
//! * [`offline`]: filtering a CSV observation stream.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod harness;
pub mod offline;
pub mod tables;

pub use dglm_core;
pub use error::{Error, Result};
