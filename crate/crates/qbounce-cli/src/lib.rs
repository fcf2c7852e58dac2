//! Library side of the `qbounce` command line: configuration parsing,
//! dataset ingestion, scenario orchestration, and plot/CSV emission.

pub mod config;
pub mod dataset;
pub mod error;
pub mod scenarios;
pub mod svg;

pub use config::{load_config, RunConfig, Scenario};
pub use error::{CliError, CliResult};
pub use scenarios::run;
