//! CSV ingestion, hourly alignment and chronological splitting.
//!
//! The CSV format is: first column `timestamp` (ISO-8601,
//! `YYYY-MM-DDTHH:00:00`), one column per channel, blank cell = missing.
//! Timestamps are wall-clock local hours; DST transitions are treated as
//! ordinary hours.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::{Duration, NaiveDateTime, Timelike};

use crate::error::{Error, Result};

/// What a channel measures, and for load channels how raw samples are
/// aggregated to hourly energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ChannelRole {
    /// Energy per sample interval (Wh); summed within each hour.
    Load,
    /// Instantaneous power samples (W); trapezoidal integration over the hour.
    LoadPower,
    /// Cumulative energy counter; last-minus-first differencing.
    LoadCumulative,
    WeatherTemp,
    WeatherHumidity,
    WeatherWind,
}

impl ChannelRole {
    pub fn is_load(self) -> bool {
        matches!(
            self,
            ChannelRole::Load | ChannelRole::LoadPower | ChannelRole::LoadCumulative
        )
    }

    pub fn is_weather(self) -> bool {
        !self.is_load()
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "load" => Ok(ChannelRole::Load),
            "load_power" => Ok(ChannelRole::LoadPower),
            "load_cumulative" => Ok(ChannelRole::LoadCumulative),
            "weather_temp" => Ok(ChannelRole::WeatherTemp),
            "weather_humidity" => Ok(ChannelRole::WeatherHumidity),
            "weather_wind" => Ok(ChannelRole::WeatherWind),
            other => Err(Error::SchemaMismatch(format!("unknown role '{other}'"))),
        }
    }
}

impl fmt::Display for ChannelRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChannelRole::Load => "load",
            ChannelRole::LoadPower => "load_power",
            ChannelRole::LoadCumulative => "load_cumulative",
            ChannelRole::WeatherTemp => "weather_temp",
            ChannelRole::WeatherHumidity => "weather_humidity",
            ChannelRole::WeatherWind => "weather_wind",
        };
        f.write_str(s)
    }
}

/// Channel-name to role map; ordered so column order is deterministic.
pub type Schema = BTreeMap<String, ChannelRole>;

/// Parse a schema file of `channel_name = role` lines. `#` starts a comment.
pub fn parse_schema_file(path: &Path) -> Result<Schema> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_schema(&text)
}

pub fn parse_schema(text: &str) -> Result<Schema> {
    let mut schema = Schema::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, role) = line
            .split_once('=')
            .ok_or_else(|| Error::SchemaMismatch(format!("expected 'name = role', got '{line}'")))?;
        schema.insert(name.trim().to_string(), ChannelRole::parse(role)?);
    }
    if schema.is_empty() {
        return Err(Error::SchemaMismatch("schema defines no channels".into()));
    }
    Ok(schema)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub role: ChannelRole,
}

/// Timestamped multichannel table; missing cells are stored as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    timestamps: Vec<NaiveDateTime>,
    channels: Vec<Channel>,
    /// Column-major: `values[channel][row]`.
    values: Vec<Vec<f64>>,
    /// `[start, end)` intervals excluded from windowing (unimputed gaps).
    pub gap_exclusions: Vec<(NaiveDateTime, NaiveDateTime)>,
}

impl TimeSeriesFrame {
    pub fn new(timestamps: Vec<NaiveDateTime>, channels: Vec<Channel>, values: Vec<Vec<f64>>) -> Result<Self> {
        for w in timestamps.windows(2) {
            if w[1] == w[0] {
                return Err(Error::DuplicateTimestamp(w[0]));
            }
            if w[1] < w[0] {
                return Err(Error::NonMonotonicTimestamp(w[1]));
            }
        }
        let mut names: Vec<&str> = channels.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::SchemaMismatch("duplicate channel names".into()));
        }
        if values.len() != channels.len() || values.iter().any(|v| v.len() != timestamps.len()) {
            return Err(Error::SchemaMismatch("value columns do not match shape".into()));
        }
        Ok(Self {
            timestamps,
            channels,
            values,
            gap_exclusions: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channels
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    pub fn values(&self, channel: usize) -> &[f64] {
        &self.values[channel]
    }

    pub fn values_by_name(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.values[self.channel_index(name)?])
    }

    pub fn values_mut(&mut self, channel: usize) -> &mut Vec<f64> {
        &mut self.values[channel]
    }

    pub fn is_missing(&self, channel: usize, row: usize) -> bool {
        self.values[channel][row].is_nan()
    }

    pub fn missing_count(&self, channel: usize) -> usize {
        self.values[channel].iter().filter(|v| v.is_nan()).count()
    }

    /// Keep rows with timestamps in `[start, end)`; gap exclusions are
    /// clipped to the kept range.
    pub fn slice_time(&self, start: NaiveDateTime, end: NaiveDateTime) -> Self {
        let lo = self.timestamps.partition_point(|t| *t < start);
        let hi = self.timestamps.partition_point(|t| *t < end);
        self.slice_rows(lo, hi)
    }

    pub fn slice_rows(&self, lo: usize, hi: usize) -> Self {
        let timestamps = self.timestamps[lo..hi].to_vec();
        let values = self.values.iter().map(|col| col[lo..hi].to_vec()).collect();
        let gap_exclusions = if timestamps.is_empty() {
            Vec::new()
        } else {
            let (start, end) = (timestamps[0], *timestamps.last().unwrap() + Duration::hours(1));
            self.gap_exclusions
                .iter()
                .filter(|(s, e)| *s < end && *e > start)
                .map(|(s, e)| ((*s).max(start), (*e).min(end)))
                .collect()
        };
        Self {
            timestamps,
            channels: self.channels.clone(),
            values,
            gap_exclusions,
        }
    }

    /// True when the frame sits on a uniform 1-hour grid, allowing jumps
    /// across declared gap exclusions.
    pub fn is_hourly(&self) -> bool {
        self.timestamps.windows(2).all(|w| {
            w[1] - w[0] == Duration::hours(1)
                || self
                    .gap_exclusions
                    .iter()
                    .any(|(s, e)| *s <= w[0] + Duration::hours(1) && *e >= w[1])
        })
    }

    /// Write the frame as CSV. Values round-trip exactly through
    /// `load_csv` (shortest-representation float formatting).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("timestamp");
        for c in &self.channels {
            out.push(',');
            out.push_str(&c.name);
        }
        out.push('\n');
        for (row, ts) in self.timestamps.iter().enumerate() {
            out.push_str(&ts.format("%Y-%m-%dT%H:%M:%S").to_string());
            for col in &self.values {
                out.push(',');
                if !col[row].is_nan() {
                    out.push_str(&format!("{}", col[row]));
                }
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

/// Carve validation from the tail of train; boundaries are timestamps.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train_end: NaiveDateTime,
    pub val_fraction: f64,
    pub test_start: NaiveDateTime,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.test_start < self.train_end {
            return Err(Error::InvalidSplit(format!(
                "test_start {} precedes train_end {}",
                self.test_start, self.train_end
            )));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidSplit(format!(
                "val_fraction {} outside (0, 1)",
                self.val_fraction
            )));
        }
        Ok(())
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s.trim(), "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s.trim(), "%Y-%m-%d %H:%M:%S"))
        .ok()
}

/// Load a CSV file against a schema. Header names must match the schema
/// keys exactly (plus the leading `timestamp` column); blank or
/// non-numeric cells become missing.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<TimeSeriesFrame> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .clone();
    let mut iter = headers.iter();
    match iter.next() {
        Some("timestamp") => {}
        other => {
            return Err(Error::SchemaMismatch(format!(
                "first column must be 'timestamp', got {other:?}"
            )))
        }
    }
    let header_names: Vec<String> = iter.map(|s| s.to_string()).collect();
    let mut schema_names: Vec<&String> = schema.keys().collect();
    schema_names.sort_unstable();
    let mut sorted_headers: Vec<&String> = header_names.iter().collect();
    sorted_headers.sort_unstable();
    if schema_names != sorted_headers {
        return Err(Error::SchemaMismatch(format!(
            "header columns {header_names:?} do not match schema channels {schema_names:?}"
        )));
    }

    let channels: Vec<Channel> = header_names
        .iter()
        .map(|n| Channel {
            name: n.clone(),
            role: schema[n],
        })
        .collect();

    let mut timestamps = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); channels.len()];
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let ts_field = record.get(0).unwrap_or("");
        let ts = parse_timestamp(ts_field).ok_or_else(|| Error::Csv {
            path: path.display().to_string(),
            message: format!("unparseable timestamp '{ts_field}'"),
        })?;
        timestamps.push(ts);
        for (i, field) in record.iter().skip(1).enumerate() {
            let v = field.trim();
            let parsed = if v.is_empty() {
                f64::NAN
            } else {
                v.parse::<f64>().unwrap_or(f64::NAN)
            };
            values[i].push(parsed);
        }
    }
    TimeSeriesFrame::new(timestamps, channels, values)
}

fn truncate_to_hour(t: NaiveDateTime) -> NaiveDateTime {
    t.with_minute(0).unwrap().with_second(0).unwrap().with_nanosecond(0).unwrap()
}

/// Aggregate a (possibly sub-hourly) frame to the hourly grid. Load
/// channels are summed/integrated to hourly energy, weather channels
/// averaged. Hours with no source samples come out missing. Idempotent
/// on hourly input.
pub fn resample_hourly(frame: &TimeSeriesFrame) -> Result<TimeSeriesFrame> {
    if frame.is_empty() {
        return Err(Error::EmptyPartition("resample_hourly on empty frame".into()));
    }
    let first = truncate_to_hour(frame.timestamps[0]);
    let last = truncate_to_hour(*frame.timestamps.last().unwrap());
    let n_hours = ((last - first).num_hours() + 1) as usize;
    let timestamps: Vec<NaiveDateTime> = (0..n_hours)
        .map(|h| first + Duration::hours(h as i64))
        .collect();

    // Sample row ranges per hour, by binary search on the source timestamps.
    let hour_range = |hour: NaiveDateTime| {
        let lo = frame.timestamps.partition_point(|t| *t < hour);
        let hi = frame.timestamps.partition_point(|t| *t < hour + Duration::hours(1));
        lo..hi
    };

    let mut values: Vec<Vec<f64>> = Vec::with_capacity(frame.channels.len());
    for (ci, channel) in frame.channels.iter().enumerate() {
        let col = &frame.values[ci];
        let mut out = Vec::with_capacity(n_hours);
        let mut prev_cumulative: Option<f64> = None;
        for &hour in &timestamps {
            let range = hour_range(hour);
            let samples: Vec<(NaiveDateTime, f64)> = range
                .clone()
                .filter(|&r| !col[r].is_nan())
                .map(|r| (frame.timestamps[r], col[r]))
                .collect();
            if samples.is_empty() {
                out.push(f64::NAN);
                continue;
            }
            let v = match channel.role {
                ChannelRole::Load => samples.iter().map(|(_, v)| v).sum(),
                ChannelRole::WeatherTemp | ChannelRole::WeatherHumidity | ChannelRole::WeatherWind => {
                    samples.iter().map(|(_, v)| v).sum::<f64>() / samples.len() as f64
                }
                ChannelRole::LoadPower => integrate_power(hour, &samples),
                ChannelRole::LoadCumulative => {
                    let last_val = samples.last().unwrap().1;
                    let base = prev_cumulative.unwrap_or(samples[0].1);
                    prev_cumulative = Some(last_val);
                    last_val - base
                }
            };
            out.push(v);
        }
        values.push(out);
    }

    let mut out = TimeSeriesFrame::new(timestamps, frame.channels.clone(), values)?;
    out.gap_exclusions = frame.gap_exclusions.clone();
    Ok(out)
}

/// Trapezoidal integration of power samples over one hour, extending the
/// first and last samples to the hour boundaries. Result is in the same
/// unit as the samples, times hours.
fn integrate_power(hour: NaiveDateTime, samples: &[(NaiveDateTime, f64)]) -> f64 {
    let hours_from = |t: NaiveDateTime| (t - hour).num_seconds() as f64 / 3600.0;
    let mut energy = samples[0].1 * hours_from(samples[0].0);
    for pair in samples.windows(2) {
        let dt = hours_from(pair[1].0) - hours_from(pair[0].0);
        energy += 0.5 * (pair[0].1 + pair[1].1) * dt;
    }
    let (t_last, v_last) = *samples.last().unwrap();
    energy += v_last * (1.0 - hours_from(t_last));
    energy
}

/// Split a frame into chronological (train, validation, test) partitions.
/// Validation is carved from the tail of the training rows.
pub fn chronological_split(
    frame: &TimeSeriesFrame,
    spec: &SplitSpec,
) -> Result<(TimeSeriesFrame, TimeSeriesFrame, TimeSeriesFrame)> {
    spec.validate()?;
    let n_train_rows = frame.timestamps.partition_point(|t| *t < spec.train_end);
    let n_val = ((n_train_rows as f64) * spec.val_fraction).floor() as usize;
    let train = frame.slice_rows(0, n_train_rows - n_val);
    let val = frame.slice_rows(n_train_rows - n_val, n_train_rows);
    let test = frame.slice_time(spec.test_start, NaiveDateTime::MAX);
    for (name, part) in [("train", &train), ("validation", &val), ("test", &test)] {
        if part.is_empty() {
            return Err(Error::EmptyPartition(name.into()));
        }
    }
    Ok((train, val, test))
}
