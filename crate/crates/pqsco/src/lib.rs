//! Host-side companion to `pqsco-core`: threaded multiplication, synthetic
//! CPU load, the benchmark harness, file formats, the handover simulator and
//! the command-line front end.

pub mod bench;
pub mod cli;
pub mod error;
pub mod formats;
pub mod loadgen;
pub mod parallel;
pub mod sim;

pub use error::{Error, Result};
pub use pqsco_core as core;
