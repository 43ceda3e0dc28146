//! Config-driven experiment runs: one TOML file describes the data, the
//! chronological split, preprocessing, and a (model x feature group) grid;
//! the runner executes every cell fail-soft and writes CSV reports.

mod config;
mod runner;
mod summary;

pub use config::{
    config_hash, load_config, DataConfig, ExperimentConfig, FeaturesSection, GridConfig,
    OutputConfig, PredictabilitySection, PreprocessConfig, SplitConfig, TrainSection,
};
pub use runner::{cell_seed, prepare, run, CellRecord, CellStatus, Prepared, RunReport};
pub use summary::{summarize, SummaryRow};
