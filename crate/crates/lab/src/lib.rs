//! Front end for `semigroup-core`: coefficient DSL, JSON problem files,
//! report formatting and the `semigroup-lab` command line.

pub mod config;
pub mod dsl;
pub mod cli;
pub mod report;

pub use cli::{run, run_with};
