use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;

use crate::signal::{is_whole_hour, TimeSeries, Unit};
use crate::{Error, Result};

pub const METER_HEADER: [&str; 4] = ["timestamp", "meter_id", "dma_id", "consumption_kwh"];
pub const WEATHER_HEADER: [&str; 3] = ["timestamp", "max_temp_c", "feels_like_c"];

#[derive(Debug, Clone, PartialEq)]
pub struct MeterReading {
    pub meter_id: String,
    pub dma_id: String,
    pub timestamp: DateTime<Utc>,
    pub consumption_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherRecord {
    pub timestamp: DateTime<Utc>,
    pub max_temp_c: f64,
    pub feels_like_c: f64,
}

/// A data row that could not be parsed. Rows are numbered from 1, with the
/// header as row 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested<T> {
    pub records: Vec<T>,
    pub errors: Vec<RowError>,
}

pub fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, String> {
    let ts = DateTime::parse_from_rfc3339(raw.trim())
        .map_err(|e| format!("bad timestamp {raw:?}: {e}"))?
        .with_timezone(&Utc);
    if !is_whole_hour(ts) {
        return Err(format!("timestamp {raw} is not on a whole hour"));
    }
    Ok(ts)
}

pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_float(raw: &str, column: &str) -> Result<f64, String> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| format!("{column} {raw:?} is not a number"))
}

fn open_csv(path: &Path, expected: &[&str]) -> Result<(csv::Reader<File>, Vec<usize>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::format(Some(1), format!("unreadable header: {e}")))?
        .clone();
    let columns = expected
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| Error::format(Some(1), format!("missing column `{name}` in {}", path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((reader, columns))
}

fn read_rows<T>(
    path: &Path,
    expected: &[&str],
    parse: impl Fn(&[&str]) -> Result<T, String>,
) -> Result<Ingested<T>> {
    let (mut reader, columns) = open_csv(path, expected)?;
    let mut out = Ingested {
        records: Vec::new(),
        errors: Vec::new(),
    };
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let parsed = row.map_err(|e| e.to_string()).and_then(|rec| {
            let fields = columns
                .iter()
                .map(|&c| rec.get(c).ok_or_else(|| format!("row has only {} fields", rec.len())))
                .collect::<Result<Vec<_>, _>>()?;
            parse(&fields)
        });
        match parsed {
            Ok(r) => out.records.push(r),
            Err(message) => out.errors.push(RowError { row: row_no, message }),
        }
    }
    Ok(out)
}

/// Reads a `timestamp,meter_id,dma_id,consumption_kwh` file. Unparseable
/// rows are reported in [`Ingested::errors`] rather than dropped silently.
pub fn ingest_meter_csv(path: impl AsRef<Path>) -> Result<Ingested<MeterReading>> {
    read_rows(path.as_ref(), &METER_HEADER, |f| {
        Ok(MeterReading {
            timestamp: parse_timestamp(f[0])?,
            meter_id: f[1].trim().to_string(),
            dma_id: f[2].trim().to_string(),
            consumption_kwh: parse_float(f[3], "consumption_kwh")?,
        })
    })
}

pub fn ingest_weather_csv(path: impl AsRef<Path>) -> Result<Ingested<WeatherRecord>> {
    read_rows(path.as_ref(), &WEATHER_HEADER, |f| {
        Ok(WeatherRecord {
            timestamp: parse_timestamp(f[0])?,
            max_temp_c: parse_float(f[1], "max_temp_c")?,
            feels_like_c: parse_float(f[2], "feels_like_c")?,
        })
    })
}

fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_meter_csv(path: impl AsRef<Path>, readings: &[MeterReading]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", METER_HEADER.join(",")).map_err(io)?;
    for r in readings {
        writeln!(
            w,
            "{},{},{},{}",
            format_timestamp(r.timestamp),
            r.meter_id,
            r.dma_id,
            r.consumption_kwh
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_weather_csv(path: impl AsRef<Path>, records: &[WeatherRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", WEATHER_HEADER.join(",")).map_err(io)?;
    for r in records {
        writeln!(
            w,
            "{},{},{}",
            format_timestamp(r.timestamp),
            r.max_temp_c,
            r.feels_like_c
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn hours_between(a: DateTime<Utc>, b: DateTime<Utc>) -> usize {
    (b - a).num_hours() as usize
}

/// Sums readings per DMA and hour.
///
/// Every DMA series spans the same hours (earliest to latest reading over
/// all DMAs). Hours without readings, or with any negative reading, are
/// left missing for imputation.
pub fn aggregate_dma(readings: &[MeterReading]) -> BTreeMap<String, TimeSeries> {
    let mut out = BTreeMap::new();
    let (Some(first), Some(last)) = (
        readings.iter().map(|r| r.timestamp).min(),
        readings.iter().map(|r| r.timestamp).max(),
    ) else {
        return out;
    };
    let len = hours_between(first, last) + 1;
    let mut sums: BTreeMap<&str, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for r in readings {
        let (vals, bad) = sums
            .entry(r.dma_id.as_str())
            .or_insert_with(|| (vec![f64::NAN; len], vec![false; len]));
        let i = hours_between(first, r.timestamp);
        if r.consumption_kwh < 0.0 || !r.consumption_kwh.is_finite() {
            bad[i] = true;
        }
        vals[i] = if vals[i].is_nan() {
            r.consumption_kwh
        } else {
            vals[i] + r.consumption_kwh
        };
    }
    for (dma, (mut vals, bad)) in sums {
        for (v, b) in vals.iter_mut().zip(bad) {
            if b {
                *v = f64::NAN;
            }
        }
        out.insert(
            dma.to_string(),
            TimeSeries::new(first, vals, Unit::Kwh).expect("whole-hour timestamps"),
        );
    }
    out
}

/// Hourly weather as two aligned series.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    pub max_temp: TimeSeries,
    pub feels_like: TimeSeries,
}

impl WeatherSeries {
    /// Lays records on an hourly grid; absent hours become missing and the
    /// first record wins for duplicated hours.
    pub fn from_records(records: &[WeatherRecord]) -> Result<Self> {
        let first = records
            .iter()
            .map(|r| r.timestamp)
            .min()
            .ok_or_else(|| Error::contract("no weather records"))?;
        let last = records.iter().map(|r| r.timestamp).max().unwrap();
        let len = hours_between(first, last) + 1;
        let mut max_temp = vec![f64::NAN; len];
        let mut feels = vec![f64::NAN; len];
        for r in records {
            let i = hours_between(first, r.timestamp);
            if max_temp[i].is_nan() && feels[i].is_nan() {
                max_temp[i] = r.max_temp_c;
                feels[i] = r.feels_like_c;
            }
        }
        Ok(Self {
            max_temp: TimeSeries::new(first, max_temp, Unit::Celsius)?,
            feels_like: TimeSeries::new(first, feels, Unit::Celsius)?,
        })
    }

    pub fn to_records(&self) -> Vec<WeatherRecord> {
        (0..self.max_temp.len())
            .map(|i| WeatherRecord {
                timestamp: self.max_temp.timestamp(i),
                max_temp_c: self.max_temp.values[i],
                feels_like_c: self.feels_like.values[i],
            })
            .collect()
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.max_temp.start()
    }

    pub fn len(&self) -> usize {
        self.max_temp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.max_temp.is_empty()
    }

    /// Restricts both series to `[start, start + len)`.
    pub fn slice(&self, start: DateTime<Utc>, len: usize) -> Result<Self> {
        let off = self
            .max_temp
            .index_of(start)
            .filter(|o| o + len <= self.len())
            .ok_or_else(|| Error::contract(format!("weather does not cover {start} + {len}h")))?;
        let cut = |s: &TimeSeries| TimeSeries::new(start, s.values[off..off + len].to_vec(), s.unit);
        Ok(Self {
            max_temp: cut(&self.max_temp)?,
            feels_like: cut(&self.feels_like)?,
        })
    }
}
