//! Feature groups: cyclical date-time encodings, calendar flags, weather
//! and cross-appliance loads, last-seen on/off states, moving statistics,
//! interaction terms and delay-embedding (phase space) features.
//!
//! Every feature value at time t depends only on data at times <= t;
//! calendar features are deterministic functions of t itself.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};

use crate::error::{Error, Result};
use crate::ingest::TimeSeriesFrame;
use crate::predictability::contiguous_segments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    /// Target history only.
    None,
    Datetime,
    Weather,
    Appliances,
    LsOnOff,
    Autoregressive,
    Interaction,
    /// Delay-embedded target; replaces the sequential target representation.
    PhaseSpace,
    /// weather plus datetime.
    WPlusDt,
    /// Union of all concrete groups except phase space.
    All,
}

impl FeatureGroup {
    pub const ALL_GROUPS: [FeatureGroup; 10] = [
        FeatureGroup::None,
        FeatureGroup::Datetime,
        FeatureGroup::Weather,
        FeatureGroup::Appliances,
        FeatureGroup::LsOnOff,
        FeatureGroup::Autoregressive,
        FeatureGroup::Interaction,
        FeatureGroup::PhaseSpace,
        FeatureGroup::WPlusDt,
        FeatureGroup::All,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureGroup::None => "none",
            FeatureGroup::Datetime => "datetime",
            FeatureGroup::Weather => "weather",
            FeatureGroup::Appliances => "appliances",
            FeatureGroup::LsOnOff => "ls_on_off",
            FeatureGroup::Autoregressive => "autoregressive",
            FeatureGroup::Interaction => "interaction",
            FeatureGroup::PhaseSpace => "phase_space",
            FeatureGroup::WPlusDt => "w_plus_dt",
            FeatureGroup::All => "all",
        }
    }

    /// Concrete groups whose columns this group contributes.
    fn members(&self) -> Vec<FeatureGroup> {
        match self {
            FeatureGroup::WPlusDt => vec![FeatureGroup::Weather, FeatureGroup::Datetime],
            FeatureGroup::All => vec![
                FeatureGroup::Datetime,
                FeatureGroup::Weather,
                FeatureGroup::Appliances,
                FeatureGroup::LsOnOff,
                FeatureGroup::Autoregressive,
                FeatureGroup::Interaction,
            ],
            FeatureGroup::None | FeatureGroup::PhaseSpace => vec![],
            g => vec![*g],
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL_GROUPS
            .iter()
            .find(|g| g.name() == s.trim())
            .copied()
            .ok_or_else(|| Error::UnknownFeatureGroup(s.to_string()))
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FeatureConfig {
    /// Holiday dates for the calendar flags.
    pub holidays: BTreeSet<NaiveDate>,
    /// ON threshold in raw load units (watt-hours per hour).
    pub on_threshold: f64,
    /// Cap for the last-seen counters, in hours.
    pub ls_cap_hours: f64,
    /// Trailing window lengths for the moving statistics.
    pub ma_windows: Vec<usize>,
    pub takens_delay: usize,
    pub takens_dimension: usize,
    /// Training span in hours; month features are emitted only past one year.
    pub train_span_hours: i64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            holidays: BTreeSet::new(),
            on_threshold: 15.0,
            ls_cap_hours: 168.0,
            ma_windows: vec![12, 24, 36, 72],
            takens_delay: 1,
            takens_dimension: 2,
            train_span_hours: 0,
        }
    }
}

/// Load a holiday calendar: one ISO date per line, `#` comments allowed.
pub fn load_holiday_calendar(path: &Path) -> Result<BTreeSet<NaiveDate>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut days = BTreeSet::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let date = NaiveDate::parse_from_str(line, "%Y-%m-%d")
            .map_err(|e| Error::InvalidParameter(format!("bad holiday date '{line}': {e}")))?;
        days.insert(date);
    }
    Ok(days)
}

/// Sine/cosine pairs for hour-of-day, day-of-week (Monday = 0),
/// week-of-month (ceil(day/7), 1..5) and, when more than a year of
/// training data is available, month-of-year.
pub fn cyclical_encode(t: NaiveDateTime, train_span_hours: i64) -> Vec<(&'static str, f64)> {
    let pair = |name_sin: &'static str, name_cos: &'static str, n: f64| {
        [(name_sin, (TAU * n).sin()), (name_cos, (TAU * n).cos())]
    };
    let hour = t.hour() as f64 / 24.0;
    let dow = t.weekday().num_days_from_monday() as f64 / 7.0;
    let wom = (t.day() as f64 / 7.0).ceil() / 5.0;
    let mut out = Vec::with_capacity(8);
    out.extend(pair("sin_hour", "cos_hour", hour));
    out.extend(pair("sin_dow", "cos_dow", dow));
    out.extend(pair("sin_wom", "cos_wom", wom));
    if train_span_hours > 365 * 24 {
        out.extend(pair("sin_month", "cos_month", t.month() as f64 / 12.0));
    }
    out
}

/// Binary (is_workday, is_holiday, is_weekend) indicators.
pub fn calendar_flags(t: NaiveDateTime, holidays: &BTreeSet<NaiveDate>) -> (f64, f64, f64) {
    let weekend = matches!(t.weekday(), chrono::Weekday::Sat | chrono::Weekday::Sun);
    let holiday = holidays.contains(&t.date());
    let workday = !weekend && !holiday;
    (workday as u8 as f64, holiday as u8 as f64, weekend as u8 as f64)
}

/// Hours since the appliance was last seen ON / OFF. The state at t is
/// ON iff load(t) > threshold; the counters are 0 while in that state
/// and capped at `cap` hours (also the value before the first occurrence).
pub fn last_seen_states(series: &[f64], threshold: f64, cap: f64) -> (Vec<f64>, Vec<f64>) {
    let mut ls_on = Vec::with_capacity(series.len());
    let mut ls_off = Vec::with_capacity(series.len());
    let mut since_on = f64::INFINITY;
    let mut since_off = f64::INFINITY;
    for &v in series {
        if v > threshold {
            since_on = 0.0;
            since_off += 1.0;
        } else {
            since_off = 0.0;
            since_on += 1.0;
        }
        ls_on.push(since_on.min(cap));
        ls_off.push(since_off.min(cap));
    }
    (ls_on, ls_off)
}

/// Moving average and moving max over strictly-past windows: the window
/// for row t covers rows t-k .. t-1. The first k rows are warm-up (NaN).
pub fn moving_stats(series: &[f64], windows: &[usize]) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::with_capacity(2 * windows.len());
    for &k in windows {
        let mut ma = vec![f64::NAN; series.len()];
        let mut mmax = vec![f64::NAN; series.len()];
        for t in k..series.len() {
            let window = &series[t - k..t];
            ma[t] = window.iter().sum::<f64>() / k as f64;
            mmax[t] = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        out.push((format!("ma_{k}"), ma));
        out.push((format!("mmax_{k}"), mmax));
    }
    out
}

/// Pairwise (sum, product, mean, population std) for every unordered
/// appliance pair, plus mean and std across all appliances per row.
/// Column count is 4 * C(A, 2) + 2.
pub fn interaction_features(channels: &[(String, &[f64])]) -> Result<Vec<(String, Vec<f64>)>> {
    if channels.len() < 2 {
        return Ok(Vec::new());
    }
    let rows = channels[0].1.len();
    let mut out = Vec::new();
    for i in 0..channels.len() {
        for j in i + 1..channels.len() {
            let (na, a) = (&channels[i].0, channels[i].1);
            let (nb, b) = (&channels[j].0, channels[j].1);
            let zip = || a.iter().zip(b.iter());
            out.push((format!("sum_{na}_{nb}"), zip().map(|(x, y)| x + y).collect()));
            out.push((format!("prod_{na}_{nb}"), zip().map(|(x, y)| x * y).collect()));
            out.push((
                format!("mean_{na}_{nb}"),
                zip().map(|(x, y)| (x + y) / 2.0).collect(),
            ));
            out.push((
                format!("std_{na}_{nb}"),
                zip().map(|(x, y)| (x - y).abs() / 2.0).collect(),
            ));
        }
    }
    let a = channels.len() as f64;
    let mut mean_all = Vec::with_capacity(rows);
    let mut std_all = Vec::with_capacity(rows);
    for row in 0..rows {
        let mean = channels.iter().map(|(_, v)| v[row]).sum::<f64>() / a;
        let var = channels.iter().map(|(_, v)| (v[row] - mean).powi(2)).sum::<f64>() / a;
        mean_all.push(mean);
        std_all.push(var.sqrt());
    }
    out.push(("mean_all".into(), mean_all));
    out.push(("std_all".into(), std_all));
    Ok(out)
}

/// Delay embedding: row t is (x_t, x_{t+delay}, ..., x_{t+(d-1)*delay}).
/// A 24-value window with delay 1, dimension 2 yields 23 rows of 2.
pub fn takens_embed(series: &[f64], delay: usize, dimension: usize) -> Result<Vec<Vec<f64>>> {
    if delay < 1 || dimension < 1 {
        return Err(Error::InvalidParameter(
            "takens delay and dimension must be >= 1".into(),
        ));
    }
    let span = (dimension - 1) * delay;
    if series.len() < span + 1 {
        return Err(Error::SeriesTooShort {
            needed: span + 1,
            got: series.len(),
        });
    }
    Ok((0..series.len() - span)
        .map(|t| (0..dimension).map(|k| series[t + k * delay]).collect())
        .collect())
}

/// Per-timestamp feature vectors with provenance-tagged named columns;
/// the target column is kept separate.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub timestamps: Vec<NaiveDateTime>,
    pub feature_names: Vec<String>,
    /// Group tag per column, parallel to `feature_names`.
    pub feature_groups: Vec<String>,
    /// Column-major: `features[column][row]`.
    pub features: Vec<Vec<f64>>,
    /// Scaled target values, parallel to `timestamps`.
    pub target: Vec<f64>,
    pub target_name: String,
    /// When set the windowing step delay-embeds the target history instead
    /// of using the sequential feature representation.
    pub phase_space: bool,
    pub takens_delay: usize,
    pub takens_dimension: usize,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }
}

/// Materialize the feature columns of `group` for `target` from a
/// preprocessed, scaled frame. `raw` is the same frame in physical units
/// (the ON threshold applies to raw loads). Warm-up rows where any
/// column is undefined are trimmed.
pub fn assemble(
    scaled: &TimeSeriesFrame,
    raw: &TimeSeriesFrame,
    target: &str,
    group: FeatureGroup,
    cfg: &FeatureConfig,
) -> Result<FeatureMatrix> {
    let target_idx = scaled.channel_index(target)?;
    if !scaled.channels()[target_idx].role.is_load() {
        return Err(Error::InvalidParameter(format!("target '{target}' is not a load channel")));
    }
    if scaled.len() != raw.len() {
        return Err(Error::LengthMismatch {
            left: scaled.len(),
            right: raw.len(),
        });
    }
    let rows = scaled.len();
    let target_scaled = scaled.values(target_idx).to_vec();

    // First feature column is always the target's own history.
    let mut names: Vec<String> = vec![format!("{target}_hist")];
    let mut groups: Vec<String> = vec!["target".into()];
    let mut columns: Vec<Vec<f64>> = vec![target_scaled.clone()];
    let mut push = |name: String, group: FeatureGroup, col: Vec<f64>| {
        names.push(name);
        groups.push(group.name().into());
        columns.push(col);
    };

    for member in group.members() {
        match member {
            FeatureGroup::Datetime => {
                let sample = cyclical_encode(scaled.timestamps()[0], cfg.train_span_hours);
                for (k, (name, _)) in sample.iter().enumerate() {
                    let col = scaled
                        .timestamps()
                        .iter()
                        .map(|&t| cyclical_encode(t, cfg.train_span_hours)[k].1)
                        .collect();
                    push((*name).into(), member, col);
                }
                let mut workday = Vec::with_capacity(rows);
                let mut holiday = Vec::with_capacity(rows);
                let mut weekend = Vec::with_capacity(rows);
                for &t in scaled.timestamps() {
                    let (w, h, we) = calendar_flags(t, &cfg.holidays);
                    workday.push(w);
                    holiday.push(h);
                    weekend.push(we);
                }
                push("is_workday".into(), member, workday);
                push("is_holiday".into(), member, holiday);
                push("is_weekend".into(), member, weekend);
            }
            FeatureGroup::Weather => {
                for (ci, ch) in scaled.channels().iter().enumerate() {
                    if ch.role.is_weather() {
                        push(ch.name.clone(), member, scaled.values(ci).to_vec());
                    }
                }
            }
            FeatureGroup::Appliances => {
                for (ci, ch) in scaled.channels().iter().enumerate() {
                    if ch.role.is_load() && ch.name != target {
                        push(ch.name.clone(), member, scaled.values(ci).to_vec());
                    }
                }
            }
            FeatureGroup::LsOnOff => {
                // Per contiguous segment so counters never run across a gap.
                let raw_target = raw.values(raw.channel_index(target)?);
                let mut ls_on = vec![f64::NAN; rows];
                let mut ls_off = vec![f64::NAN; rows];
                for seg in contiguous_segments(scaled) {
                    let (on, off) =
                        last_seen_states(&raw_target[seg.clone()], cfg.on_threshold, cfg.ls_cap_hours);
                    ls_on[seg.clone()].copy_from_slice(&on);
                    ls_off[seg].copy_from_slice(&off);
                }
                let scale = |v: Vec<f64>| v.into_iter().map(|x| x / cfg.ls_cap_hours).collect();
                push("ls_on".into(), member, scale(ls_on));
                push("ls_off".into(), member, scale(ls_off));
            }
            FeatureGroup::Autoregressive => {
                let mut cols: Vec<(String, Vec<f64>)> = cfg
                    .ma_windows
                    .iter()
                    .flat_map(|&k| vec![(format!("ma_{k}"), vec![f64::NAN; rows]), (format!("mmax_{k}"), vec![f64::NAN; rows])])
                    .collect();
                for seg in contiguous_segments(scaled) {
                    let segment_cols = moving_stats(&target_scaled[seg.clone()], &cfg.ma_windows);
                    for (dst, (_, src)) in cols.iter_mut().zip(segment_cols) {
                        dst.1[seg.clone()].copy_from_slice(&src);
                    }
                }
                for (name, col) in cols {
                    push(name, member, col);
                }
            }
            FeatureGroup::Interaction => {
                let loads: Vec<(String, &[f64])> = scaled
                    .channels()
                    .iter()
                    .enumerate()
                    .filter(|(_, ch)| ch.role.is_load())
                    .map(|(ci, ch)| (ch.name.clone(), scaled.values(ci)))
                    .collect();
                for (name, col) in interaction_features(&loads)? {
                    push(name, member, col);
                }
            }
            _ => unreachable!("members() only yields concrete groups"),
        }
    }

    // Trim rows where any column (or the target) is undefined.
    let keep: Vec<usize> = (0..rows)
        .filter(|&r| !target_scaled[r].is_nan() && columns.iter().all(|c| !c[r].is_nan()))
        .collect();
    let select = |v: &[f64]| keep.iter().map(|&r| v[r]).collect::<Vec<f64>>();
    let features: Vec<Vec<f64>> = columns.iter().map(|c| select(c)).collect();
    let timestamps: Vec<NaiveDateTime> = keep.iter().map(|&r| scaled.timestamps()[r]).collect();
    let target_vals = select(&target_scaled);

    Ok(FeatureMatrix {
        timestamps,
        feature_names: names,
        feature_groups: groups,
        features,
        target: target_vals,
        target_name: target.to_string(),
        phase_space: group == FeatureGroup::PhaseSpace,
        takens_delay: cfg.takens_delay,
        takens_dimension: cfg.takens_dimension,
    })
}
