//! Command-line front end: configuration, the `solve`/`sweep`/`check`
//! commands, and the files they write.

pub mod commands;
pub mod config;
pub mod emit;

pub use commands::{cmd_check, cmd_solve, cmd_sweep, Outcome};
pub use config::{Emit, Overrides, RunConfig};
