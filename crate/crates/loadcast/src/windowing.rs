//! Supervised (input-window, output-window) sampling: stride-1 rolling
//! windows for training, stride-24 sliding windows for testing, plus
//! flattening for flat-input models.

use std::path::Path;

use chrono::{Duration, NaiveDateTime};

use crate::error::{Error, Result};
use crate::features::{takens_embed, FeatureMatrix};
use crate::preprocess::ChannelScaler;

/// Windowed samples with inputs of shape (n, steps, n_features) and
/// 24-value targets. For phase-space matrices the input window is the
/// delay-embedded target history instead of the sequential features.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub n: usize,
    pub steps: usize,
    pub n_features: usize,
    /// Row-major `[sample][step][feature]`.
    pub inputs: Vec<f64>,
    pub in_len: usize,
    pub out_len: usize,
    /// Scaled targets, `[sample][out_len]`.
    pub targets: Vec<f64>,
    /// Scaled target values of the raw input window, `[sample][in_len]`;
    /// the seasonal-naive forecast source.
    pub target_history: Vec<f64>,
    pub feature_names: Vec<String>,
    /// Start of each output window.
    pub sample_starts: Vec<NaiveDateTime>,
    /// Scaler of the target channel, for inverse-transforming predictions.
    pub target_scaler: Option<ChannelScaler>,
    pub phase_space: bool,
}

impl WindowedDataset {
    pub fn input(&self, i: usize) -> &[f64] {
        let w = self.steps * self.n_features;
        &self.inputs[i * w..(i + 1) * w]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.out_len..(i + 1) * self.out_len]
    }

    pub fn history(&self, i: usize) -> &[f64] {
        &self.target_history[i * self.in_len..(i + 1) * self.in_len]
    }

    pub fn flat_width(&self) -> usize {
        self.steps * self.n_features
    }

    /// Inverse-transform a scaled value to physical units.
    pub fn to_physical(&self, z: f64) -> f64 {
        match &self.target_scaler {
            Some(s) => s.invert(z),
            None => z,
        }
    }

    /// Keep the samples with the given indices.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let w = self.flat_width();
        let mut out = Self {
            n: indices.len(),
            inputs: Vec::with_capacity(indices.len() * w),
            targets: Vec::with_capacity(indices.len() * self.out_len),
            target_history: Vec::with_capacity(indices.len() * self.in_len),
            sample_starts: Vec::with_capacity(indices.len()),
            ..self.clone()
        };
        out.inputs.clear();
        out.targets.clear();
        out.target_history.clear();
        out.sample_starts.clear();
        for &i in indices {
            out.inputs.extend_from_slice(self.input(i));
            out.targets.extend_from_slice(self.target(i));
            out.target_history.extend_from_slice(self.history(i));
            out.sample_starts.push(self.sample_starts[i]);
        }
        out
    }

    /// Chronological split: the last `val_fraction` of samples become
    /// validation.
    pub fn split_validation(&self, val_fraction: f64) -> (Self, Self) {
        let n_val = ((self.n as f64) * val_fraction).floor() as usize;
        let cut = self.n - n_val;
        let train: Vec<usize> = (0..cut).collect();
        let val: Vec<usize> = (cut..self.n).collect();
        (self.subset(&train), self.subset(&val))
    }
}

/// Build windows over a feature matrix. Sample i uses input rows
/// `[i*stride, i*stride + in_len)` and target rows
/// `[i*stride + in_len, i*stride + in_len + out_len)`; samples whose row
/// span is not hourly-contiguous (they would cross a gap exclusion) are
/// dropped.
pub fn make_windows(
    matrix: &FeatureMatrix,
    in_len: usize,
    out_len: usize,
    stride: usize,
    target_scaler: Option<ChannelScaler>,
) -> Result<WindowedDataset> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1".into()));
    }
    let total = in_len + out_len;
    let rows = matrix.n_rows();
    if rows < total {
        return Err(Error::WindowingTooShort { rows, needed: total });
    }

    let (steps, n_features) = if matrix.phase_space {
        (
            in_len - (matrix.takens_dimension - 1) * matrix.takens_delay,
            matrix.takens_dimension,
        )
    } else {
        (in_len, matrix.n_features())
    };

    let n_candidates = (rows - total) / stride + 1;
    let mut ds = WindowedDataset {
        n: 0,
        steps,
        n_features,
        inputs: Vec::new(),
        in_len,
        out_len,
        targets: Vec::new(),
        target_history: Vec::new(),
        feature_names: if matrix.phase_space {
            (0..matrix.takens_dimension).map(|k| format!("takens_{k}")).collect()
        } else {
            matrix.feature_names.clone()
        },
        sample_starts: Vec::new(),
        target_scaler,
        phase_space: matrix.phase_space,
    };

    for i in 0..n_candidates {
        let start = i * stride;
        let end = start + total;
        let span_ok = matrix.timestamps[end - 1] - matrix.timestamps[start]
            == Duration::hours((total - 1) as i64);
        if !span_ok {
            continue;
        }
        let history = &matrix.target[start..start + in_len];
        if matrix.phase_space {
            for row in takens_embed(history, matrix.takens_delay, matrix.takens_dimension)? {
                ds.inputs.extend_from_slice(&row);
            }
        } else {
            for step in start..start + in_len {
                for col in &matrix.features {
                    ds.inputs.push(col[step]);
                }
            }
        }
        ds.target_history.extend_from_slice(history);
        ds.targets.extend_from_slice(&matrix.target[start + in_len..end]);
        ds.sample_starts.push(matrix.timestamps[start + in_len]);
        ds.n += 1;
    }
    if ds.n == 0 {
        return Err(Error::WindowingTooShort { rows, needed: total });
    }
    Ok(ds)
}

/// Flattened copy of the inputs: `(n, steps * n_features)`, time-major
/// then feature (`[t0f0, t0f1, t1f0, ...]`).
pub fn flatten(ds: &WindowedDataset) -> Vec<f64> {
    // inputs are already stored [sample][step][feature]
    ds.inputs.clone()
}

/// Rebuild the (steps, n_features) view of a flat row; inverse of
/// `flatten` given the dataset shape.
pub fn unflatten(flat: &[f64], steps: usize, n_features: usize) -> Vec<Vec<f64>> {
    (0..steps)
        .map(|t| flat[t * n_features..(t + 1) * n_features].to_vec())
        .collect()
}

/// Train/validation/test windows for one feature matrix:
/// stride-1 rolling windows whose full span lies before `train_end`
/// (validation = chronologically last `val_fraction` of them), and
/// stride-24 sliding windows tiling the test range from `test_start`.
pub fn split_windows(
    matrix: &FeatureMatrix,
    train_end: NaiveDateTime,
    test_start: NaiveDateTime,
    val_fraction: f64,
    in_len: usize,
    out_len: usize,
    target_scaler: Option<ChannelScaler>,
) -> Result<(WindowedDataset, WindowedDataset, WindowedDataset)> {
    let train_rows = matrix.timestamps.partition_point(|t| *t < train_end);
    let train_matrix = slice_matrix(matrix, 0, train_rows);
    let all_train = make_windows(&train_matrix, in_len, out_len, 1, target_scaler.clone())?;
    let (train, val) = all_train.split_validation(val_fraction);
    if train.n == 0 || val.n == 0 {
        return Err(Error::EmptyPartition("train/validation windows".into()));
    }

    // Test inputs may reach back into the last in_len hours of train.
    let test_row = matrix.timestamps.partition_point(|t| *t < test_start);
    if test_row < in_len {
        return Err(Error::EmptyPartition("test windows".into()));
    }
    let test_matrix = slice_matrix(matrix, test_row - in_len, matrix.n_rows());
    let test = make_windows(&test_matrix, in_len, out_len, out_len, target_scaler)?;
    Ok((train, val, test))
}

fn slice_matrix(matrix: &FeatureMatrix, lo: usize, hi: usize) -> FeatureMatrix {
    FeatureMatrix {
        timestamps: matrix.timestamps[lo..hi].to_vec(),
        feature_names: matrix.feature_names.clone(),
        feature_groups: matrix.feature_groups.clone(),
        features: matrix.features.iter().map(|c| c[lo..hi].to_vec()).collect(),
        target: matrix.target[lo..hi].to_vec(),
        target_name: matrix.target_name.clone(),
        phase_space: matrix.phase_space,
        takens_delay: matrix.takens_delay,
        takens_dimension: matrix.takens_dimension,
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct DatasetManifest {
    n: usize,
    steps: usize,
    n_features: usize,
    in_len: usize,
    out_len: usize,
    feature_names: Vec<String>,
    sample_starts: Vec<NaiveDateTime>,
    target_scaler: Option<ChannelScaler>,
    phase_space: bool,
}

/// Persist a dataset as CSV shards plus a JSON manifest.
pub fn save_dataset(ds: &WindowedDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let write = |name: &str, data: &[f64], width: usize| -> Result<()> {
        let mut out = String::new();
        for row in data.chunks(width) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        std::fs::write(dir.join(name), out).map_err(|e| Error::Io {
            path: dir.join(name).display().to_string(),
            source: e,
        })
    };
    write("inputs.csv", &ds.inputs, ds.flat_width())?;
    write("targets.csv", &ds.targets, ds.out_len)?;
    write("history.csv", &ds.target_history, ds.in_len)?;
    let manifest = DatasetManifest {
        n: ds.n,
        steps: ds.steps,
        n_features: ds.n_features,
        in_len: ds.in_len,
        out_len: ds.out_len,
        feature_names: ds.feature_names.clone(),
        sample_starts: ds.sample_starts.clone(),
        target_scaler: ds.target_scaler.clone(),
        phase_space: ds.phase_space,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), json).map_err(|e| Error::Io {
        path: dir.join("manifest.json").display().to_string(),
        source: e,
    })
}

pub fn load_dataset(dir: &Path) -> Result<WindowedDataset> {
    let read_csv = |name: &str| -> Result<Vec<f64>> {
        let text = std::fs::read_to_string(dir.join(name)).map_err(|e| Error::Io {
            path: dir.join(name).display().to_string(),
            source: e,
        })?;
        let mut out = Vec::new();
        for line in text.lines() {
            for field in line.split(',') {
                out.push(field.parse::<f64>().map_err(|e| Error::Csv {
                    path: dir.join(name).display().to_string(),
                    message: e.to_string(),
                })?);
            }
        }
        Ok(out)
    };
    let manifest_text = std::fs::read_to_string(dir.join("manifest.json")).map_err(|e| Error::Io {
        path: dir.join("manifest.json").display().to_string(),
        source: e,
    })?;
    let m: DatasetManifest =
        serde_json::from_str(&manifest_text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(WindowedDataset {
        n: m.n,
        steps: m.steps,
        n_features: m.n_features,
        inputs: read_csv("inputs.csv")?,
        in_len: m.in_len,
        out_len: m.out_len,
        targets: read_csv("targets.csv")?,
        target_history: read_csv("history.csv")?,
        feature_names: m.feature_names,
        sample_starts: m.sample_starts,
        target_scaler: m.target_scaler,
        phase_space: m.phase_space,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn matrix_of(n: usize, n_features: usize) -> FeatureMatrix {
        let t0 = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        FeatureMatrix {
            timestamps: (0..n as i64).map(|h| t0 + Duration::hours(h)).collect(),
            feature_names: (0..n_features).map(|i| format!("f{i}")).collect(),
            feature_groups: vec!["target".into(); n_features],
            features: (0..n_features)
                .map(|c| (0..n).map(|r| (r * 10 + c) as f64).collect())
                .collect(),
            target: (0..n).map(|r| r as f64).collect(),
            target_name: "f0".into(),
            phase_space: false,
            takens_delay: 1,
            takens_dimension: 2,
        }
    }

    #[test]
    fn exactly_one_window_fits() {
        let ds = make_windows(&matrix_of(48, 1), 24, 24, 1, None).unwrap();
        assert_eq!(ds.n, 1);
        assert_eq!(ds.target(0), (24..48).map(|v| v as f64).collect::<Vec<_>>());
    }

    #[test]
    fn stride_counts_match_enumeration() {
        let ds1 = make_windows(&matrix_of(72, 1), 24, 24, 1, None).unwrap();
        assert_eq!(ds1.n, 25);
        let ds24 = make_windows(&matrix_of(72, 1), 24, 24, 24, None).unwrap();
        assert_eq!(ds24.n, 2);
    }

    #[test]
    fn exclusion_drops_crossing_sample() {
        // hourly rows with hour 30 removed: a time discontinuity, as a
        // gap exclusion leaves one. Stride-24 samples spanning the removed
        // hour are dropped; only the final, fully contiguous one survives.
        let mut m = matrix_of(97, 1);
        let drop = 30usize;
        m.timestamps.remove(drop);
        m.target.remove(drop);
        for col in &mut m.features {
            col.remove(drop);
        }
        let ds = make_windows(&m, 24, 24, 24, None).unwrap();
        assert_eq!(ds.n, 1);
    }

    #[test]
    fn count_formula_vs_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = rng.gen_range(48..400usize);
            let stride = if rng.gen_bool(0.5) { 1 } else { 24 };
            let ds = make_windows(&matrix_of(t, 1), 24, 24, stride, None).unwrap();
            // brute force: enumerate admissible start offsets
            let mut count = 0usize;
            let mut start = 0usize;
            while start + 48 <= t {
                count += 1;
                start += stride;
            }
            assert_eq!(ds.n, count, "T={t} stride={stride}");
        }
    }

    #[test]
    fn stride_24_output_windows_tile_without_overlap() {
        let ds = make_windows(&matrix_of(24 + 24 * 5, 1), 24, 24, 24, None).unwrap();
        for i in 1..ds.n {
            assert_eq!(
                ds.sample_starts[i] - ds.sample_starts[i - 1],
                Duration::hours(24)
            );
        }
    }

    #[test]
    fn flat_layout_time_major() {
        let ds = make_windows(&matrix_of(48, 2), 24, 24, 1, None).unwrap();
        let flat = flatten(&ds);
        // [t0f0, t0f1, t1f0, ...]
        assert_eq!(flat[0], 0.0); // row 0, feature 0
        assert_eq!(flat[1], 1.0); // row 0, feature 1
        assert_eq!(flat[2], 10.0); // row 1, feature 0
        let rows = unflatten(&flat[..ds.flat_width()], ds.steps, ds.n_features);
        assert_eq!(rows.len(), 24);
        assert_eq!(rows[1], vec![10.0, 11.0]);
    }

    #[test]
    fn flatten_round_trip() {
        let ds = make_windows(&matrix_of(60, 3), 24, 24, 1, None).unwrap();
        let flat = flatten(&ds);
        for i in 0..ds.n {
            let rows = unflatten(
                &flat[i * ds.flat_width()..(i + 1) * ds.flat_width()],
                ds.steps,
                ds.n_features,
            );
            let rebuilt: Vec<f64> = rows.into_iter().flatten().collect();
            assert_eq!(rebuilt.as_slice(), ds.input(i));
        }
    }

    #[test]
    fn single_feature_flat_equals_window() {
        let ds = make_windows(&matrix_of(48, 1), 24, 24, 1, None).unwrap();
        assert_eq!(flatten(&ds)[..24], ds.inputs[..24]);
    }

    #[test]
    fn phase_space_window_shape() {
        let mut m = matrix_of(48, 1);
        m.phase_space = true;
        let ds = make_windows(&m, 24, 24, 1, None).unwrap();
        assert_eq!(ds.steps, 23);
        assert_eq!(ds.n_features, 2);
        // first embedded row is (x_0, x_1)
        assert_eq!(&ds.input(0)[..2], &[0.0, 1.0]);
    }

    #[test]
    fn split_windows_partitions() {
        let m = matrix_of(24 * 20, 1);
        let t0 = m.timestamps[0];
        let train_end = t0 + Duration::hours(24 * 16);
        let (train, val, test) =
            split_windows(&m, train_end, train_end, 0.2, 24, 24, None).unwrap();
        // train windows never cross into test
        for i in 0..train.n {
            assert!(train.sample_starts[i] + Duration::hours(23) < train_end);
        }
        for i in 0..val.n {
            assert!(val.sample_starts[i] + Duration::hours(23) < train_end);
        }
        // test output windows start at test_start and tile forward
        assert_eq!(test.sample_starts[0], train_end);
        assert_eq!(test.n, 4);
        // roughly 20% of training windows go to validation
        let total = train.n + val.n;
        assert_eq!(val.n, (total as f64 * 0.2).floor() as usize);
        // validation is the chronological tail
        assert!(val.sample_starts[0] > train.sample_starts[train.n - 1]);
    }

    #[test]
    fn dataset_save_load_round_trip() {
        let mut ds = make_windows(&matrix_of(80, 2), 24, 24, 1, None).unwrap();
        ds.target_scaler = Some(ChannelScaler {
            name: "f0".into(),
            mean: 3.0,
            std: 2.0,
            scaled: true,
        });
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded, ds);
    }
}
