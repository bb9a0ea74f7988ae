//! Command-line front end: construct, certify, witness, eval, render,
//! export and import.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod schema;
pub mod svg;

pub use commands::{run, Cli, CliError};
