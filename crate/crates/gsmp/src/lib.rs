//! File formats, a thread-pool executor and the command-line driver for `gsmp-core`.

pub mod cli;
pub mod exec;
pub mod expr;
pub mod formats;

pub use gsmp_core as core;
