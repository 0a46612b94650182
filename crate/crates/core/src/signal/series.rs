use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    Kwh,
    Celsius,
    /// Dimensionless encodings (cyclical time features).
    Unitless,
}

/// Regular hourly series. Missing observations are stored as `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start: DateTime<Utc>,
    pub values: Vec<f64>,
    pub unit: Unit,
}

pub fn is_whole_hour(ts: DateTime<Utc>) -> bool {
    ts.minute() == 0 && ts.second() == 0 && ts.nanosecond() == 0
}

impl TimeSeries {
    pub fn new(start: DateTime<Utc>, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if !is_whole_hour(start) {
            return Err(Error::contract(format!("series start {start} is not on a whole hour")));
        }
        Ok(Self { start, values, unit })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::hours(index as i64)
    }

    /// Exclusive end timestamp.
    pub fn end(&self) -> DateTime<Utc> {
        self.timestamp(self.values.len())
    }

    /// Position of `ts` in the series, if it falls on one of its hours.
    pub fn index_of(&self, ts: DateTime<Utc>) -> Option<usize> {
        let delta = ts - self.start;
        if delta < Duration::zero() || delta.num_seconds() % 3600 != 0 {
            return None;
        }
        let idx = delta.num_hours() as usize;
        (idx < self.values.len()).then_some(idx)
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            start: self.start,
            values,
            unit: self.unit,
        }
    }
}
