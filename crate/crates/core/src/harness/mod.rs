//! Multi-drop experiments: configuration, per-drop evaluation, the
//! communication-sensing region sweep, empirical CDFs and CSV output.
//!
//! Every file is long-format CSV with columns
//! `drop_id,mode,entity_id,metric,value`, next to a `manifest.toml` holding
//! the resolved configuration.

mod cdf;
mod config;
mod experiment;
mod output;
mod region;
mod stats;

pub use cdf::{pool_samples, run_cdf, CdfOutput, ModeSamples};
pub use config::{db_to_linear, parse_modes, ExperimentConfig, ExperimentSection, ModeName};
pub use experiment::{
    drop_seed, receive_snr, run_experiment, simulate_drop, simulate_drops, DropRecord, ModeRecord, RunOutput,
};
pub use output::{prepare_output_dir, write_manifest, LongCsv, Row};
pub use region::{
    aggregate_level, cs_region, region_drop, run_region, summarize_region, LevelOutcome, RegionDrop, RegionOutput,
    RegionPoint, RegionResult,
};
pub use stats::{empirical_cdf, quantile};
