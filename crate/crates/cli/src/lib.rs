//! Command-line harness around `rodeodb-core`: file formats, run
//! configuration, the results log and the phase plot.

pub mod commands;
pub mod config;
pub mod error;
pub mod matrix_file;
pub mod results;
pub mod svg;
