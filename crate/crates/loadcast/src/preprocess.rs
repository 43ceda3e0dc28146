//! Gap and value imputation, winsorization and leakage-safe standardization.
//!
//! The pipeline order is fixed: gap imputation, value imputation,
//! winsorization, scaling.

use chrono::{Datelike, Duration, NaiveDateTime, Timelike};

use crate::error::{Error, Result};
use crate::ingest::TimeSeriesFrame;

/// Insert missing rows for hourly gaps up to `max_gap_hours`; longer gaps
/// are recorded in `gap_exclusions` and left absent.
pub fn impute_time_gaps(frame: &TimeSeriesFrame, max_gap_hours: i64) -> Result<TimeSeriesFrame> {
    if frame.is_empty() {
        return Ok(frame.clone());
    }
    let src = frame.timestamps();
    let mut timestamps = Vec::with_capacity(src.len());
    let mut keep_rows: Vec<Option<usize>> = Vec::with_capacity(src.len());
    let mut exclusions = frame.gap_exclusions.clone();

    timestamps.push(src[0]);
    keep_rows.push(Some(0));
    for row in 1..src.len() {
        let gap = (src[row] - src[row - 1]).num_hours() - 1;
        if gap > 0 {
            if gap <= max_gap_hours {
                for h in 1..=gap {
                    timestamps.push(src[row - 1] + Duration::hours(h));
                    keep_rows.push(None);
                }
            } else {
                exclusions.push((src[row - 1] + Duration::hours(1), src[row]));
            }
        }
        timestamps.push(src[row]);
        keep_rows.push(Some(row));
    }

    let values = (0..frame.channels().len())
        .map(|ci| {
            keep_rows
                .iter()
                .map(|r| r.map_or(f64::NAN, |r| frame.values(ci)[r]))
                .collect()
        })
        .collect();
    let mut out = TimeSeriesFrame::new(timestamps, frame.channels().to_vec(), values)?;
    exclusions.sort();
    exclusions.dedup();
    out.gap_exclusions = exclusions;
    Ok(out)
}

/// Impute missing load values with the mean of strictly earlier
/// observations at the same (hour-of-day, day-of-week); falls back to the
/// same hour-of-day, then to 0.
pub fn impute_load(frame: &TimeSeriesFrame, channel: &str) -> Result<TimeSeriesFrame> {
    let ci = frame.channel_index(channel)?;
    if !frame.channels()[ci].role.is_load() {
        return Err(Error::InvalidParameter(format!("'{channel}' is not a load channel")));
    }
    let mut out = frame.clone();
    let observed: Vec<f64> = frame.values(ci).to_vec();
    let timestamps = frame.timestamps().to_vec();

    // Running sums over observed (never imputed) history only.
    let mut by_hour_dow = [[(0.0f64, 0usize); 7]; 24];
    let mut by_hour = [(0.0f64, 0usize); 24];
    for row in 0..timestamps.len() {
        let hour = timestamps[row].hour() as usize;
        let dow = timestamps[row].weekday().num_days_from_monday() as usize;
        let v = observed[row];
        if v.is_nan() {
            let filled = if by_hour_dow[hour][dow].1 > 0 {
                by_hour_dow[hour][dow].0 / by_hour_dow[hour][dow].1 as f64
            } else if by_hour[hour].1 > 0 {
                by_hour[hour].0 / by_hour[hour].1 as f64
            } else {
                0.0
            };
            out.values_mut(ci)[row] = filled;
        } else {
            by_hour_dow[hour][dow].0 += v;
            by_hour_dow[hour][dow].1 += 1;
            by_hour[hour].0 += v;
            by_hour[hour].1 += 1;
        }
    }
    Ok(out)
}

/// Impute missing weather values with the mean of the same ISO week;
/// falls back to linear interpolation between the nearest observed
/// neighbors.
pub fn impute_weather(frame: &TimeSeriesFrame, channel: &str) -> Result<TimeSeriesFrame> {
    let ci = frame.channel_index(channel)?;
    if !frame.channels()[ci].role.is_weather() {
        return Err(Error::InvalidParameter(format!("'{channel}' is not a weather channel")));
    }
    let mut out = frame.clone();
    let observed: Vec<f64> = frame.values(ci).to_vec();
    let timestamps = frame.timestamps();

    let iso_week = |t: NaiveDateTime| {
        let w = t.date().iso_week();
        (w.year(), w.week())
    };
    use std::collections::HashMap;
    let mut week_sums: HashMap<(i32, u32), (f64, usize)> = HashMap::new();
    for (row, v) in observed.iter().enumerate() {
        if !v.is_nan() {
            let e = week_sums.entry(iso_week(timestamps[row])).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }

    for row in 0..observed.len() {
        if !observed[row].is_nan() {
            continue;
        }
        let filled = match week_sums.get(&iso_week(timestamps[row])) {
            Some((sum, n)) if *n > 0 => sum / *n as f64,
            _ => interpolate_at(&observed, timestamps, row),
        };
        out.values_mut(ci)[row] = filled;
    }
    Ok(out)
}

/// Linear interpolation in time between the nearest observed neighbors;
/// one-sided neighbors extend as constants.
fn interpolate_at(values: &[f64], timestamps: &[NaiveDateTime], row: usize) -> f64 {
    let left = (0..row).rev().find(|&r| !values[r].is_nan());
    let right = (row + 1..values.len()).find(|&r| !values[r].is_nan());
    match (left, right) {
        (Some(l), Some(r)) => {
            let span = (timestamps[r] - timestamps[l]).num_seconds() as f64;
            let frac = (timestamps[row] - timestamps[l]).num_seconds() as f64 / span;
            values[l] + frac * (values[r] - values[l])
        }
        (Some(l), None) => values[l],
        (None, Some(r)) => values[r],
        (None, None) => f64::NAN,
    }
}

/// Percentile by linear interpolation between order statistics
/// (`rank = q * (n - 1)` on the sorted sample).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// 90% winsorization with forward-fill replacement: values strictly
/// outside [p_lower, p_upper] are replaced by the most recent retained
/// value; a leading outlier is clamped to the violated bound. Missing
/// cells are passed through untouched.
pub fn winsorize(series: &[f64], lower_q: f64, upper_q: f64) -> Result<Vec<f64>> {
    let observed: Vec<f64> = series.iter().copied().filter(|v| !v.is_nan()).collect();
    if observed.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: observed.len(),
        });
    }
    let mut sorted = observed;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = percentile(&sorted, lower_q);
    let hi = percentile(&sorted, upper_q);

    let mut out = Vec::with_capacity(series.len());
    let mut last_kept: Option<f64> = None;
    for &v in series {
        if v.is_nan() {
            out.push(v);
        } else if v < lo || v > hi {
            out.push(last_kept.unwrap_or_else(|| v.clamp(lo, hi)));
        } else {
            last_kept = Some(v);
            out.push(v);
        }
    }
    Ok(out)
}

/// Per-channel standardization statistics, fit on a leading fraction of
/// the rows only.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelScaler {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    /// False for constant channels, which pass through unscaled.
    pub scaled: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Scaler {
    pub channels: Vec<ChannelScaler>,
    pub fit_rows: usize,
    pub fit_start: NaiveDateTime,
    pub fit_end: NaiveDateTime,
}

impl Scaler {
    pub fn channel(&self, name: &str) -> Result<&ChannelScaler> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }
}

impl ChannelScaler {
    pub fn transform(&self, x: f64) -> f64 {
        if self.scaled {
            (x - self.mean) / self.std
        } else {
            x
        }
    }

    pub fn invert(&self, z: f64) -> f64 {
        if self.scaled {
            z * self.std + self.mean
        } else {
            z
        }
    }
}

/// Fit mean and population (1/N) standard deviation on the first
/// `floor(fit_fraction * T)` rows of every channel.
pub fn fit_scaler(frame: &TimeSeriesFrame, fit_fraction: f64) -> Result<Scaler> {
    if !(fit_fraction > 0.0 && fit_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fit_fraction {fit_fraction} outside (0, 1]"
        )));
    }
    if frame.is_empty() {
        return Err(Error::EmptyPartition("fit_scaler on empty frame".into()));
    }
    let fit_rows = ((frame.len() as f64) * fit_fraction).floor() as usize;
    let fit_rows = fit_rows.max(1);
    let mut channels = Vec::with_capacity(frame.channels().len());
    for (ci, channel) in frame.channels().iter().enumerate() {
        let fit: Vec<f64> = frame.values(ci)[..fit_rows]
            .iter()
            .copied()
            .filter(|v| !v.is_nan())
            .collect();
        let (mean, std) = if fit.is_empty() {
            (0.0, 0.0)
        } else {
            let mean = fit.iter().sum::<f64>() / fit.len() as f64;
            let var = fit.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / fit.len() as f64;
            (mean, var.sqrt())
        };
        channels.push(ChannelScaler {
            name: channel.name.clone(),
            mean,
            std,
            scaled: std > 0.0,
        });
    }
    Ok(Scaler {
        channels,
        fit_rows,
        fit_start: frame.timestamps()[0],
        fit_end: frame.timestamps()[fit_rows - 1],
    })
}

pub fn apply_scaler(frame: &TimeSeriesFrame, scaler: &Scaler) -> Result<TimeSeriesFrame> {
    map_scaler(frame, scaler, ChannelScaler::transform)
}

pub fn invert_scaler(frame: &TimeSeriesFrame, scaler: &Scaler) -> Result<TimeSeriesFrame> {
    map_scaler(frame, scaler, ChannelScaler::invert)
}

fn map_scaler(
    frame: &TimeSeriesFrame,
    scaler: &Scaler,
    f: impl Fn(&ChannelScaler, f64) -> f64,
) -> Result<TimeSeriesFrame> {
    let mut out = frame.clone();
    for (ci, channel) in frame.channels().iter().enumerate() {
        let cs = scaler.channel(&channel.name)?;
        for v in out.values_mut(ci).iter_mut() {
            if !v.is_nan() {
                *v = f(cs, *v);
            }
        }
    }
    Ok(out)
}
