//! Files, experiments and the `tuckreg` command line for
//! [`tuckreg_core`].
//!
//! - [`tnsr`]: the TNSR binary tensor format.
//! - [`bundle`]: model bundles, datasets and fit outputs on disk.
//! - [`sweep`]: the synthetic (method, m, sigma) experiment grid and its CSV.
//! - [`cli`]: argument parsing and subcommand dispatch.

pub mod bundle;
pub mod cli;
mod clock;
mod error;
pub mod sweep;
pub mod tnsr;

pub use clock::MonotonicClock;
pub use error::{Error, Result};
