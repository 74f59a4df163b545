//! File formats, example data and the command-line front end for
//! [`ssm_core`].
//!
//! The `ssm` binary wraps [`cli::run`]; everything it does is also
//! available here for use from code and tests.

pub mod artifact;
pub mod cli;
pub mod error;
pub mod examples;
pub mod matrices;
pub mod progress;
pub mod table;

pub use artifact::Artifact;
pub use cli::{run, Command, ModelChoice, RunConfig};
pub use error::{Error, Result};
pub use table::{load_csv, Table};
