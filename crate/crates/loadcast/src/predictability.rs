//! Weighted permutation entropy: Shannon entropy over ordinal patterns of
//! delay-embedded windows, each pattern weighted by its window variance.
//! Low values mean regular, predictable series; normalized values above
//! 0.5 indicate substantial randomness.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::TimeSeriesFrame;

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct WpeParams {
    /// Embedding dimension m.
    pub order: usize,
    /// Lag between pattern elements.
    pub delay: usize,
    /// Divide by ln(m!) when true.
    pub normalize: bool,
}

impl Default for WpeParams {
    fn default() -> Self {
        Self {
            order: 7,
            delay: 1,
            normalize: false,
        }
    }
}

impl WpeParams {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidParameter("wpe order must be >= 2".into()));
        }
        if self.delay < 1 {
            return Err(Error::InvalidParameter("wpe delay must be >= 1".into()));
        }
        Ok(())
    }

    fn min_len(&self) -> usize {
        (self.order - 1) * self.delay + 1
    }
}

/// Ordinal pattern of one embedding vector: the stable argsort ranks,
/// ties broken by order of appearance (earlier index ranks first).
fn pattern_of(window: &[f64], delay: usize, order: usize) -> Vec<u8> {
    let mut idx: Vec<u8> = (0..order as u8).collect();
    idx.sort_by(|&a, &b| {
        window[a as usize * delay]
            .partial_cmp(&window[b as usize * delay])
            .unwrap()
            .then(a.cmp(&b))
    });
    idx
}

/// Population variance of the embedding vector; the pattern weight.
fn weight_of(window: &[f64], delay: usize, order: usize) -> f64 {
    let mean = (0..order).map(|k| window[k * delay]).sum::<f64>() / order as f64;
    (0..order).map(|k| (window[k * delay] - mean).powi(2)).sum::<f64>() / order as f64
}

/// Emit (pattern, weight) for every embedding window of the series.
pub fn ordinal_patterns(series: &[f64], params: &WpeParams) -> Result<Vec<(Vec<u8>, f64)>> {
    params.validate()?;
    let min = params.min_len();
    if series.len() < min {
        return Err(Error::SeriesTooShort {
            needed: min,
            got: series.len(),
        });
    }
    let span = (params.order - 1) * params.delay;
    Ok((0..series.len() - span)
        .map(|j| {
            let w = &series[j..];
            (
                pattern_of(w, params.delay, params.order),
                weight_of(w, params.delay, params.order),
            )
        })
        .collect())
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|k| (k as f64).ln()).sum()
}

fn entropy_of_weights(by_pattern: &BTreeMap<Vec<u8>, f64>, params: &WpeParams) -> f64 {
    let total: f64 = by_pattern.values().sum();
    if total <= 0.0 {
        // Constant series: zero total weight, perfectly predictable.
        return 0.0;
    }
    let mut h = 0.0;
    for &w in by_pattern.values() {
        if w > 0.0 {
            let p = w / total;
            h -= p * p.ln();
        }
    }
    if params.normalize {
        h /= ln_factorial(params.order);
    }
    h
}

/// Weighted permutation entropy of a single fully-observed series.
pub fn weighted_permutation_entropy(series: &[f64], params: &WpeParams) -> Result<f64> {
    let mut by_pattern: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    for (pattern, w) in ordinal_patterns(series, params)? {
        *by_pattern.entry(pattern).or_insert(0.0) += w;
    }
    Ok(entropy_of_weights(&by_pattern, params))
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ChannelPredictability {
    pub channel: String,
    /// Unnormalized H_w in nats.
    pub wpe: f64,
    /// H_w / ln(m!); the 0.5 randomness threshold applies here.
    pub wpe_normalized: f64,
    pub n_patterns: usize,
    pub n_windows: usize,
    pub total_weight: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PredictabilityReport {
    pub params: WpeParams,
    pub rows: Vec<ChannelPredictability>,
}

impl PredictabilityReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("channel,wpe,wpe_normalized,n_patterns,n_windows\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.channel, r.wpe, r.wpe_normalized, r.n_patterns, r.n_windows
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

/// One wPE row per load channel. Windows never span a gap exclusion:
/// patterns are accumulated per contiguous segment. Missing cells inside
/// a segment are a precondition violation.
pub fn predictability_report(frame: &TimeSeriesFrame, params: &WpeParams) -> Result<PredictabilityReport> {
    params.validate()?;
    let mut rows = Vec::new();
    for (ci, channel) in frame.channels().iter().enumerate() {
        if !channel.role.is_load() {
            continue;
        }
        let mut by_pattern: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        let mut n_windows = 0usize;
        for segment in contiguous_segments(frame) {
            let series = &frame.values(ci)[segment.clone()];
            if series.iter().any(|v| v.is_nan()) {
                return Err(Error::InvalidParameter(format!(
                    "channel '{}' has missing cells; preprocess before the predictability step",
                    channel.name
                )));
            }
            if series.len() < params.min_len() {
                continue;
            }
            for (pattern, w) in ordinal_patterns(series, params)? {
                *by_pattern.entry(pattern).or_insert(0.0) += w;
                n_windows += 1;
            }
        }
        if n_windows == 0 {
            return Err(Error::SeriesTooShort {
                needed: params.min_len(),
                got: frame.len(),
            });
        }
        let unnormalized = entropy_of_weights(
            &by_pattern,
            &WpeParams {
                normalize: false,
                ..*params
            },
        );
        rows.push(ChannelPredictability {
            channel: channel.name.clone(),
            wpe: unnormalized,
            wpe_normalized: unnormalized / ln_factorial(params.order),
            n_patterns: by_pattern.len(),
            n_windows,
            total_weight: by_pattern.values().sum(),
        });
    }
    Ok(PredictabilityReport {
        params: *params,
        rows,
    })
}

/// Row ranges between gap exclusions (rows are contiguous in time inside
/// each range).
pub(crate) fn contiguous_segments(frame: &TimeSeriesFrame) -> Vec<std::ops::Range<usize>> {
    let ts = frame.timestamps();
    if ts.is_empty() {
        return Vec::new();
    }
    let mut segments = Vec::new();
    let mut start = 0usize;
    for row in 1..ts.len() {
        if (ts[row] - ts[row - 1]) != chrono::Duration::hours(1) {
            segments.push(start..row);
            start = row;
        }
    }
    segments.push(start..ts.len());
    segments
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Channel, ChannelRole};
    use chrono::{Duration, NaiveDate};

    fn params(order: usize, delay: usize, normalize: bool) -> WpeParams {
        WpeParams {
            order,
            delay,
            normalize,
        }
    }

    #[test]
    fn ascending_windows_share_one_pattern() {
        let out = ordinal_patterns(&[1.0, 2.0, 3.0, 4.0], &params(3, 1, false)).unwrap();
        assert_eq!(out.len(), 2);
        for (pattern, w) in &out {
            assert_eq!(pattern, &vec![0, 1, 2]);
            assert!((w - 2.0 / 3.0).abs() < 1e-12); // var(1,2,3) with 1/m
        }
    }

    #[test]
    fn constant_series_all_weights_zero() {
        let out = ordinal_patterns(&[5.0; 6], &params(3, 1, false)).unwrap();
        assert!(out.iter().all(|(_, w)| *w == 0.0));
        let patterns: std::collections::HashSet<_> = out.iter().map(|(p, _)| p.clone()).collect();
        assert_eq!(patterns.len(), 1); // ties resolve by order of appearance
    }

    #[test]
    fn single_window_pattern_by_sorting() {
        // brute-force sort oracle: sorting (3,1,2) visits indices 1, 2, 0
        let out = ordinal_patterns(&[3.0, 1.0, 2.0], &params(3, 1, false)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0, vec![1, 2, 0]);
        assert!((out[0].1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn short_series_errors() {
        assert!(matches!(
            ordinal_patterns(&[1.0, 2.0], &params(3, 1, false)),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn monotone_series_has_zero_entropy() {
        for len in [5usize, 50, 500] {
            let series: Vec<f64> = (0..len).map(|v| v as f64).collect();
            let h = weighted_permutation_entropy(&series, &params(3, 1, false)).unwrap();
            assert_eq!(h, 0.0);
        }
    }

    #[test]
    fn alternating_series_hits_ln2() {
        // 101 values -> 100 order-2 windows, an exact 50/50 pattern split
        let series: Vec<f64> = (0..101).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
        let h = weighted_permutation_entropy(&series, &params(2, 1, false)).unwrap();
        assert!((h - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn constant_series_entropy_zero() {
        let h = weighted_permutation_entropy(&[3.0; 40], &params(3, 1, true)).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn affine_invariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let series: Vec<f64> = (0..400).map(|_| rng.gen::<f64>()).collect();
        let mapped: Vec<f64> = series.iter().map(|v| 3.5 * v - 2.0).collect();
        for m in 2..=5 {
            let h0 = weighted_permutation_entropy(&series, &params(m, 1, false)).unwrap();
            let h1 = weighted_permutation_entropy(&mapped, &params(m, 1, false)).unwrap();
            assert!((h0 - h1).abs() < 1e-9, "m={m}: {h0} vs {h1}");
        }
    }

    #[test]
    fn entropy_bounded_by_ln_m_factorial() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for m in 2..=5 {
            let series: Vec<f64> = (0..300).map(|_| rng.gen::<f64>()).collect();
            let h = weighted_permutation_entropy(&series, &params(m, 1, false)).unwrap();
            assert!(h >= 0.0 && h <= ln_factorial(m) + 1e-12);
        }
    }

    fn frame_of(channels: Vec<(&str, Vec<f64>)>) -> TimeSeriesFrame {
        let n = channels[0].1.len();
        let t0 = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let timestamps = (0..n as i64).map(|h| t0 + Duration::hours(h)).collect();
        let (chs, values): (Vec<Channel>, Vec<Vec<f64>>) = channels
            .into_iter()
            .map(|(name, v)| {
                (
                    Channel {
                        name: name.into(),
                        role: ChannelRole::Load,
                    },
                    v,
                )
            })
            .unzip();
        TimeSeriesFrame::new(timestamps, chs, values).unwrap()
    }

    #[test]
    fn report_constant_channel_is_zero() {
        let frame = frame_of(vec![("fridge", vec![7.0; 100])]);
        let report = predictability_report(&frame, &params(3, 1, false)).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].wpe, 0.0);
    }

    #[test]
    fn random_channel_scores_above_sawtooth() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let sawtooth: Vec<f64> = (0..2000).map(|i| (i % 24) as f64).collect();
        let noise: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>()).collect();
        let frame = frame_of(vec![("saw", sawtooth), ("rand", noise)]);
        let report = predictability_report(&frame, &params(3, 1, false)).unwrap();
        let get = |name: &str| {
            report
                .rows
                .iter()
                .find(|r| r.channel == name)
                .unwrap()
                .wpe_normalized
        };
        assert!(get("rand") > get("saw"));
    }

    #[test]
    fn report_row_per_load_channel() {
        let frame = frame_of(vec![
            ("a", (0..50).map(|v| v as f64).collect()),
            ("b", (0..50).map(|v| (v % 3) as f64).collect()),
        ]);
        let report = predictability_report(&frame, &WpeParams::default()).unwrap();
        assert_eq!(report.rows.len(), 2);
    }
}
