//! Files, parallel drivers and the `lpmax` command line on top of
//! [`lpmax_core`].

pub mod config;
pub mod error;
pub mod output;
pub mod parallel;
pub mod plotdata;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use run::{run, RunOptions};
