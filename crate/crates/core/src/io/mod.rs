//! Configuration files, CSV output and restart snapshots.

pub mod config;
pub mod csv;
pub mod snapshot;

pub use config::{parse_config, serialize_config, GridConfig, OutputConfig, RunConfig};
pub use snapshot::{params_digest, read_snapshot, write_snapshot, Snapshot};
