//! Experiment execution: the preprocessing pipeline, per-cell training,
//! and report writing. Cells fail soft — one diverging model leaves the
//! rest of the grid intact — and all data outputs are byte-deterministic
//! for a fixed config and seed.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::features::{assemble, load_holiday_calendar, FeatureConfig, FeatureGroup};
use crate::forecasters::{fit, save_model, ForecastModel, ForecasterKind, TrainingLog};
use crate::ingest::{load_csv, parse_schema_file, resample_hourly, TimeSeriesFrame};
use crate::metrics::{evaluate_model, EvalRow};
use crate::predictability::{predictability_report, PredictabilityReport};
use crate::preprocess::{
    apply_scaler, fit_scaler, impute_load, impute_time_gaps, impute_weather, winsorize, Scaler,
};
use crate::windowing::split_windows;

/// The preprocessed inputs shared by every grid cell.
pub struct Prepared {
    /// Physical units, imputed and winsorized.
    pub raw: TimeSeriesFrame,
    pub scaled: TimeSeriesFrame,
    pub scaler: Scaler,
    pub predictability: PredictabilityReport,
    pub feature_cfg: FeatureConfig,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Run the fixed preprocessing order: gap bridging, load imputation,
/// weather imputation, winsorization, then standardization fit on the
/// leading rows. Predictability is measured on the imputed physical data.
pub fn prepare(cfg: &ExperimentConfig, base: &Path) -> Result<Prepared> {
    let schema = parse_schema_file(&resolve(base, &cfg.data.schema))?;
    let mut frame = load_csv(&resolve(base, &cfg.data.input), &schema)?;
    if cfg.data.resample {
        frame = resample_hourly(&frame)?;
    }
    frame = impute_time_gaps(&frame, cfg.preprocess.max_gap_hours)?;
    let channels = frame.channels().to_vec();
    for c in &channels {
        if c.role.is_load() {
            frame = impute_load(&frame, &c.name)?;
        } else if c.role.is_weather() {
            frame = impute_weather(&frame, &c.name)?;
        }
    }

    let predictability = predictability_report(&frame, &cfg.predictability.params())?;

    for c in &channels {
        if c.role.is_load() {
            let ci = frame.channel_index(&c.name)?;
            let w = winsorize(
                frame.values(ci),
                cfg.preprocess.winsorize_lower,
                cfg.preprocess.winsorize_upper,
            )?;
            *frame.values_mut(ci) = w;
        }
    }

    let scaler = fit_scaler(&frame, cfg.preprocess.scale_fit_fraction)?;
    let scaled = apply_scaler(&frame, &scaler)?;

    let holidays = match &cfg.data.holidays {
        Some(p) => load_holiday_calendar(&resolve(base, p))?,
        None => Default::default(),
    };
    let train_span_hours = (cfg.split.train_end - frame.timestamps()[0]).num_hours();
    let feature_cfg = FeatureConfig {
        holidays,
        on_threshold: cfg.features.on_threshold,
        ls_cap_hours: cfg.features.ls_cap_hours,
        ma_windows: cfg.features.ma_windows.clone(),
        takens_delay: cfg.features.takens_delay,
        takens_dimension: cfg.features.takens_dimension,
        train_span_hours,
    };
    Ok(Prepared {
        raw: frame,
        scaled,
        scaler,
        predictability,
        feature_cfg,
    })
}

/// Per-cell RNG seed: the base seed mixed with a digest of the cell
/// coordinates, so a cell's randomness doesn't depend on grid order.
pub fn cell_seed(base: u64, model: ForecasterKind, group: FeatureGroup) -> u64 {
    let digest = Sha256::digest(format!("{}/{}", model.name(), group.name()).as_bytes());
    base ^ u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct CellRecord {
    pub model: ForecasterKind,
    pub group: FeatureGroup,
    pub row: Option<EvalRow>,
    pub status: CellStatus,
}

pub struct RunReport {
    pub config_hash: String,
    pub records: Vec<CellRecord>,
    pub predictability: PredictabilityReport,
    pub out_dir: PathBuf,
}

impl RunReport {
    pub fn n_failed(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.status != CellStatus::Ok)
            .count()
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    model: ForecasterKind,
    group: FeatureGroup,
) -> Result<(EvalRow, ForecastModel, Option<TrainingLog>)> {
    let spec = cfg.train.spec(model);
    let matrix = assemble(
        &prepared.scaled,
        &prepared.raw,
        &cfg.data.target,
        group,
        &prepared.feature_cfg,
    )?;
    let target_scaler = prepared.scaler.channel(&cfg.data.target)?.clone();
    let (train_ds, val_ds, test_ds) = split_windows(
        &matrix,
        cfg.split.train_end,
        cfg.split.test_start,
        cfg.split.val_fraction,
        cfg.train.in_len,
        cfg.train.out_len,
        Some(target_scaler),
    )?;
    let seed = cell_seed(cfg.train.seed, model, group);
    let outcome = fit(&spec, &train_ds, &val_ds, seed)?;
    let mut row = evaluate_model(&outcome.model, &test_ds)?;
    row.feature_group = group.name().into();
    row.train_seconds = outcome.train_seconds;
    Ok((row, outcome.model, outcome.log))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[derive(serde::Serialize)]
struct Manifest {
    config_hash: String,
    package_version: String,
    target: String,
    n_rows: usize,
    train_end: String,
    test_start: String,
    n_cells: usize,
    n_failed: usize,
    cells: Vec<ManifestCell>,
}

#[derive(serde::Serialize)]
struct ManifestCell {
    model: String,
    feature_group: String,
    status: String,
}

/// Execute the grid and write `predictability.csv`, `grid.csv`,
/// `report.csv` and `manifest.json` into the output directory.
/// `grid.csv` and `manifest.json` carry no timing, so reruns of the same
/// config and data are byte-identical.
pub fn run(cfg: &ExperimentConfig, base: &Path) -> Result<RunReport> {
    let out_dir = resolve(base, &cfg.output.dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let prepared = prepare(cfg, base)?;
    prepared
        .predictability
        .write_csv(&out_dir.join("predictability.csv"))?;

    let cells: Vec<(ForecasterKind, FeatureGroup)> = cfg
        .grid
        .models
        .iter()
        .flat_map(|m| cfg.grid.feature_groups.iter().map(move |g| (*m, *g)))
        .collect();

    let n_workers = cfg
        .train
        .workers
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        })
        .clamp(1, cells.len().max(1));

    let models_dir = out_dir.join("models");
    let logs_dir = out_dir.join("logs");
    if cfg.output.save_models {
        for d in [&models_dir, &logs_dir] {
            std::fs::create_dir_all(d).map_err(|e| Error::Io {
                path: d.display().to_string(),
                source: e,
            })?;
        }
    }

    let next = Mutex::new(0usize);
    let slots: Vec<Mutex<Option<CellRecord>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..n_workers {
            scope.spawn(|| loop {
                let idx = {
                    let mut n = next.lock().unwrap();
                    if *n >= cells.len() {
                        break;
                    }
                    let i = *n;
                    *n += 1;
                    i
                };
                let (model, group) = cells[idx];
                let record = match run_cell(cfg, &prepared, model, group) {
                    Ok((row, fitted, log)) => {
                        if cfg.output.save_models {
                            let stem = format!("{}_{}", model.name(), group.name());
                            // keep cell failures soft even here
                            let _ = save_model(&fitted, &models_dir.join(format!("{stem}.bin")));
                            if let Some(log) = &log {
                                let _ = log.write_csv(&logs_dir.join(format!("{stem}_training.csv")));
                            }
                        }
                        CellRecord {
                            model,
                            group,
                            row: Some(row),
                            status: CellStatus::Ok,
                        }
                    }
                    Err(e) => CellRecord {
                        model,
                        group,
                        row: None,
                        status: CellStatus::Failed(e.to_string()),
                    },
                };
                *slots[idx].lock().unwrap() = Some(record);
            });
        }
    });
    let records: Vec<CellRecord> = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("all cells visited"))
        .collect();

    // grid.csv: deterministic metric table, grid order
    let mut grid = String::from("model,feature_group,status,rmse,nrmse,mae,acc95,mase,n_windows\n");
    for r in &records {
        match (&r.status, &r.row) {
            (CellStatus::Ok, Some(row)) => grid.push_str(&format!(
                "{},{},ok,{},{},{},{},{},{}\n",
                r.model.name(),
                r.group.name(),
                row.rmse,
                fmt_opt(row.nrmse),
                row.mae,
                row.acc95,
                fmt_opt(row.mase),
                row.n_windows
            )),
            _ => grid.push_str(&format!(
                "{},{},failed,,,,,,\n",
                r.model.name(),
                r.group.name()
            )),
        }
    }
    write_file(&out_dir.join("grid.csv"), &grid)?;

    // report.csv: grid.csv plus wall-clock training time and error text
    let mut report =
        String::from("model,feature_group,status,rmse,nrmse,mae,acc95,mase,n_windows,train_seconds,error\n");
    for r in &records {
        match (&r.status, &r.row) {
            (CellStatus::Ok, Some(row)) => report.push_str(&format!(
                "{},{},ok,{},{},{},{},{},{},{},\n",
                r.model.name(),
                r.group.name(),
                row.rmse,
                fmt_opt(row.nrmse),
                row.mae,
                row.acc95,
                fmt_opt(row.mase),
                row.n_windows,
                row.train_seconds
            )),
            (CellStatus::Failed(e), _) => report.push_str(&format!(
                "{},{},failed,,,,,,,,\"{}\"\n",
                r.model.name(),
                r.group.name(),
                e.replace('"', "'")
            )),
            _ => unreachable!(),
        }
    }
    write_file(&out_dir.join("report.csv"), &report)?;

    let hash = super::config::config_hash(cfg);
    let manifest = Manifest {
        config_hash: hash.clone(),
        package_version: env!("CARGO_PKG_VERSION").to_string(),
        target: cfg.data.target.clone(),
        n_rows: prepared.raw.len(),
        train_end: cfg.split.train_end.to_string(),
        test_start: cfg.split.test_start.to_string(),
        n_cells: records.len(),
        n_failed: records.iter().filter(|r| r.status != CellStatus::Ok).count(),
        cells: records
            .iter()
            .map(|r| ManifestCell {
                model: r.model.name().into(),
                feature_group: r.group.name().into(),
                status: match &r.status {
                    CellStatus::Ok => "ok".into(),
                    CellStatus::Failed(e) => format!("failed: {e}"),
                },
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    write_file(&out_dir.join("manifest.json"), &json)?;

    Ok(RunReport {
        config_hash: hash,
        records,
        predictability: prepared.predictability,
        out_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_seed_is_order_free_and_distinct() {
        let a = cell_seed(42, ForecasterKind::Lstm, FeatureGroup::None);
        let b = cell_seed(42, ForecasterKind::Lstm, FeatureGroup::None);
        assert_eq!(a, b);
        assert_ne!(a, cell_seed(42, ForecasterKind::Lstm, FeatureGroup::Weather));
        assert_ne!(a, cell_seed(42, ForecasterKind::Ffnn, FeatureGroup::None));
        assert_ne!(a, cell_seed(43, ForecasterKind::Lstm, FeatureGroup::None));
    }
}
