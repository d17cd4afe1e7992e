//! Command-line front end: scenario loading, preference parsing and report emission.

pub mod args;
mod run;
pub mod scenario;

pub use run::{run, Outcome, EXIT_INVALID, EXIT_OK, EXIT_VIOLATION};
