//! Appliance-level electric load forecasting in three steps:
//!
//! 1. **Predictability** — weighted permutation entropy per channel, so you
//!    know how much signal there is before fitting anything.
//! 2. **Feature engineering** — cyclical date-time encodings, weather,
//!    appliance cross-loads, last-seen on/off states, moving statistics,
//!    interaction terms and delay-embedding (phase space) features,
//!    organized as named feature groups.
//! 3. **Forecasting** — 24-hour-ahead hourly forecasts from a seasonal-naive
//!    baseline, multi-output support vector regression, and feed-forward,
//!    LSTM and BiLSTM networks trained with hand-rolled reverse-mode
//!    gradients, evaluated with RMSE / nRMSE / MAE / acc95 / MASE.
//!
//! The `experiment` module drives the whole pipeline from a single TOML
//! config and sweeps a (model x feature-group) grid; see the `examples/`
//! directory for runnable entry points into each capability and the
//! `loadcast` binary for the CLI.

pub mod error;
pub mod experiment;
pub mod features;
pub mod forecasters;
pub mod ingest;
pub mod metrics;
pub mod predictability;
pub mod preprocess;
pub mod synth;
pub mod windowing;

pub use error::{Error, Result};
pub use features::{FeatureConfig, FeatureGroup, FeatureMatrix};
pub use forecasters::{fit, ForecastModel, ForecasterKind, ForecasterSpec};
pub use ingest::{ChannelRole, SplitSpec, TimeSeriesFrame};
pub use metrics::EvalRow;
pub use predictability::{PredictabilityReport, WpeParams};
pub use preprocess::Scaler;
pub use windowing::WindowedDataset;
