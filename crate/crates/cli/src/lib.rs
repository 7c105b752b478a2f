//! File formats, workload generation and the experiment driver behind the `dsssp`
//! binary.

pub mod error;
pub mod formats;
pub mod run;
pub mod threads;
pub mod workload;

pub use error::{CliError, CliResult};
