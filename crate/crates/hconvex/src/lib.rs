//! Command-line front end, parallel executor and grid file formats for
//! [`hconvex_core`].

pub mod cli;
pub mod error;
pub mod exec;
pub mod gridio;
pub mod source;

pub use error::{CliError, Result};
pub use exec::Parallel;
