//! Experiment configuration: TOML grammar, validation, and hashing.
//!
//! Minimal config:
//!
//! ```toml
//! [data]
//! input = "household.csv"
//! schema = "schema.txt"
//! target = "fridge"
//!
//! [split]
//! train_end = "2023-04-08T00:00:00"
//! test_start = "2023-04-08T00:00:00"
//!
//! [grid]
//! models = ["naive", "lstm"]
//! feature_groups = ["none", "w_plus_dt"]
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Optional sections `[preprocess]`, `[predictability]`, `[features]` and
//! `[train]` override the pipeline defaults field by field.

use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::FeatureGroup;
use crate::forecasters::{ForecasterKind, ForecasterSpec};
use crate::predictability::WpeParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub input: PathBuf,
    pub schema: PathBuf,
    /// Load channel to forecast.
    pub target: String,
    /// Holiday calendar (one `YYYY-MM-DD` per line).
    #[serde(default)]
    pub holidays: Option<PathBuf>,
    /// Resample sub-hourly input to the hourly grid first.
    #[serde(default)]
    pub resample: bool,
}

fn default_val_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Quoted `YYYY-MM-DDTHH:MM:SS`; training rows end here (exclusive).
    pub train_end: NaiveDateTime,
    pub test_start: NaiveDateTime,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
}

fn default_max_gap_hours() -> i64 {
    72
}
fn default_winsor_lower() -> f64 {
    0.05
}
fn default_winsor_upper() -> f64 {
    0.95
}
fn default_scale_fit_fraction() -> f64 {
    0.8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Gaps up to this length are bridged with imputable missing rows;
    /// longer gaps become windowing exclusions.
    #[serde(default = "default_max_gap_hours")]
    pub max_gap_hours: i64,
    #[serde(default = "default_winsor_lower")]
    pub winsorize_lower: f64,
    #[serde(default = "default_winsor_upper")]
    pub winsorize_upper: f64,
    /// Leading fraction of rows the standardizer is fit on.
    #[serde(default = "default_scale_fit_fraction")]
    pub scale_fit_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            max_gap_hours: default_max_gap_hours(),
            winsorize_lower: default_winsor_lower(),
            winsorize_upper: default_winsor_upper(),
            scale_fit_fraction: default_scale_fit_fraction(),
        }
    }
}

fn default_wpe_order() -> usize {
    7
}
fn default_wpe_delay() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictabilitySection {
    #[serde(default = "default_wpe_order")]
    pub order: usize,
    #[serde(default = "default_wpe_delay")]
    pub delay: usize,
    #[serde(default)]
    pub normalize: bool,
}

impl Default for PredictabilitySection {
    fn default() -> Self {
        Self {
            order: default_wpe_order(),
            delay: default_wpe_delay(),
            normalize: false,
        }
    }
}

impl PredictabilitySection {
    pub fn params(&self) -> WpeParams {
        WpeParams {
            order: self.order,
            delay: self.delay,
            normalize: self.normalize,
        }
    }
}

fn default_on_threshold() -> f64 {
    15.0
}
fn default_ls_cap_hours() -> f64 {
    168.0
}
fn default_ma_windows() -> Vec<usize> {
    vec![12, 24, 36, 72]
}
fn default_takens_delay() -> usize {
    1
}
fn default_takens_dimension() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturesSection {
    #[serde(default = "default_on_threshold")]
    pub on_threshold: f64,
    #[serde(default = "default_ls_cap_hours")]
    pub ls_cap_hours: f64,
    #[serde(default = "default_ma_windows")]
    pub ma_windows: Vec<usize>,
    #[serde(default = "default_takens_delay")]
    pub takens_delay: usize,
    #[serde(default = "default_takens_dimension")]
    pub takens_dimension: usize,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        Self {
            on_threshold: default_on_threshold(),
            ls_cap_hours: default_ls_cap_hours(),
            ma_windows: default_ma_windows(),
            takens_delay: default_takens_delay(),
            takens_dimension: default_takens_dimension(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub models: Vec<ForecasterKind>,
    pub feature_groups: Vec<FeatureGroup>,
}

fn default_seed() -> u64 {
    42
}
fn default_in_len() -> usize {
    24
}
fn default_out_len() -> usize {
    24
}

/// Training settings; unset hyperparameters fall back to each
/// forecaster's defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads for the grid; default = one per cell, capped by the
    /// machine's parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_in_len")]
    pub in_len: usize,
    #[serde(default = "default_out_len")]
    pub out_len: usize,
    #[serde(default)]
    pub hidden: Option<usize>,
    #[serde(default)]
    pub hidden_layers: Option<usize>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub max_epochs: Option<usize>,
    #[serde(default)]
    pub patience: Option<usize>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub max_samples: Option<usize>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            workers: None,
            in_len: default_in_len(),
            out_len: default_out_len(),
            hidden: None,
            hidden_layers: None,
            learning_rate: None,
            batch_size: None,
            max_epochs: None,
            patience: None,
            c: None,
            epsilon: None,
            gamma: None,
            max_samples: None,
        }
    }
}

impl TrainSection {
    /// Forecaster defaults with this section's overrides applied.
    pub fn spec(&self, kind: ForecasterKind) -> ForecasterSpec {
        let mut s = ForecasterSpec::new(kind);
        if let Some(v) = self.hidden {
            s.hidden = v;
        }
        if let Some(v) = self.hidden_layers {
            s.hidden_layers = v;
        }
        if let Some(v) = self.learning_rate {
            s.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            s.batch_size = v;
        }
        if let Some(v) = self.max_epochs {
            s.max_epochs = v;
        }
        if let Some(v) = self.patience {
            s.patience = v;
        }
        if let Some(v) = self.c {
            s.c = v;
        }
        if let Some(v) = self.epsilon {
            s.epsilon = v;
        }
        if self.gamma.is_some() {
            s.gamma = self.gamma;
        }
        if let Some(v) = self.max_samples {
            s.max_samples = v;
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write per-cell model binaries and training logs.
    #[serde(default)]
    pub save_models: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub predictability: PredictabilitySection,
    #[serde(default)]
    pub features: FeaturesSection,
    pub grid: GridConfig,
    #[serde(default)]
    pub train: TrainSection,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.models.is_empty() || self.grid.feature_groups.is_empty() {
            return Err(Error::InvalidConfig("grid must list at least one model and one feature group".into()));
        }
        if self.split.test_start < self.split.train_end {
            return Err(Error::InvalidConfig(format!(
                "test_start {} precedes train_end {}",
                self.split.test_start, self.split.train_end
            )));
        }
        if !(0.0..1.0).contains(&self.split.val_fraction) || self.split.val_fraction == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "val_fraction {} outside (0, 1)",
                self.split.val_fraction
            )));
        }
        if self.preprocess.winsorize_lower >= self.preprocess.winsorize_upper {
            return Err(Error::InvalidConfig("winsorize_lower must be below winsorize_upper".into()));
        }
        if self.train.in_len == 0 || self.train.out_len == 0 {
            return Err(Error::InvalidConfig("in_len and out_len must be positive".into()));
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Stable hex digest of the parsed config (not the raw file text, so
/// formatting and comments don't change it).
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    let digest = Sha256::digest(&json);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [data]
        input = "household.csv"
        schema = "schema.txt"
        target = "fridge"

        [split]
        train_end = "2023-04-08T00:00:00"
        test_start = "2023-04-08T00:00:00"

        [grid]
        models = ["naive", "lstm"]
        feature_groups = ["none", "w_plus_dt"]

        [output]
        dir = "out"
    "#;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.split.val_fraction, 0.2);
        assert_eq!(cfg.preprocess.max_gap_hours, 72);
        assert_eq!(cfg.predictability.order, 7);
        assert_eq!(cfg.features.on_threshold, 15.0);
        assert_eq!(cfg.train.seed, 42);
        assert_eq!(cfg.train.in_len, 24);
        assert_eq!(cfg.grid.models, vec![ForecasterKind::Naive, ForecasterKind::Lstm]);
        assert_eq!(
            cfg.grid.feature_groups,
            vec![FeatureGroup::None, FeatureGroup::WPlusDt]
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("[output]", "typo_key = 1\n[output]");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn bad_split_order_is_rejected() {
        let text = MINIMAL.replace("test_start = \"2023-04-08T00:00:00\"", "test_start = \"2023-01-01T00:00:00\"");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let a = parse(MINIMAL).unwrap();
        let b = parse(&MINIMAL.replace("\n        ", "\n")).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let c = parse(&MINIMAL.replace("\"fridge\"", "\"freezer\"")).unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn train_overrides_apply_onto_defaults() {
        let text = MINIMAL.to_string()
            + "\n[train]\nseed = 7\nhidden = 16\nlearning_rate = 0.01\n";
        let cfg = parse(&text).unwrap();
        let spec = cfg.train.spec(ForecasterKind::Lstm);
        assert_eq!(spec.hidden, 16);
        assert_eq!(spec.learning_rate, 0.01);
        assert_eq!(spec.batch_size, 32); // untouched default
    }
}
