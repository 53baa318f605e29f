//! On-disk artifacts: run configuration, energy traces, binary snapshots and
//! plot-ready slices.

mod config;
mod csv;
mod slice;
mod snapshot;

pub use config::{parse_config, parse_config_file, ConfigFile, OutputSettings};
pub use csv::{energy_csv_string, parse_energy_csv, read_energy_csv, write_energy_csv, ENERGY_CSV_HEADER};
pub use slice::{export_slice, Axis, SliceSelector};
pub use snapshot::{read_snapshot, snapshot_size, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
