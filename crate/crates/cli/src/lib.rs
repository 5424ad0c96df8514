//! Command-line front end for `gpsl-core`: figure data as CSV and SVG,
//! oracle checks, and config-file parameterization.

pub mod commands;
pub mod config;
pub mod error;
pub mod fit;
pub mod output;
pub mod svg;

pub use error::{CliError, CliResult};
