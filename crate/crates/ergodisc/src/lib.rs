//! Files, threads and the command line around `ergodisc-core`.
//!
//! * [`doc`]: JSON documents for maps and matrix sequences.
//! * [`formats`]: CSV tables, EGRD successor tables, PPM/PNG images.
//! * [`parallel`]: rayon versions of the heavy core computations, with
//!   results identical to the serial ones.
//! * [`config`] and [`commands`]: the experiment runner used by the
//!   `ergodisc` binary.

pub mod commands;
pub mod config;
pub mod doc;
pub mod error;
pub mod formats;
pub mod parallel;

pub use commands::{execute, Failure, Report};
pub use config::{Experiment, ExperimentConfig, Overrides};
pub use error::{Error, Result};
