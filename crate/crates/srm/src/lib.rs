//! Snapshot files, run configs, ensembles and the command implementations
//! behind the `srm` binary.

pub mod analyze;
pub mod bench;
pub mod config;
pub mod error;
pub mod generate;
pub mod output;
pub mod percolate;
pub mod snapshot;

pub use config::Config;
pub use error::CliError;
pub use snapshot::SnapshotFile;
