//! Seeded synthetic district-heating data.
//!
//! Every series is a deterministic composition plus independent Gaussian
//! noise scaled by `noise_level`:
//!
//! ```text
//! φ(t)        = 2π·(day_of_year(t) − 20) / 365.25        (coldest ~20 Jan)
//! temp(t)     = 8 − 10·cos φ + 3·sin(2π·(hour − 9)/24)    + 20·noise_level·ε₁
//! feels(t)    = temp(t) − 2 − 0.1·max(0, 10 − temp(t))  + 10·noise_level·ε₂
//! demand_i(t) = s_i·(1 + 0.6·cos φ + daily(hour) + weekly(weekday)) + s_i·noise_level·ε₃
//! daily(h)    = 0.35·exp(−(h−7)²/4.5) + 0.25·exp(−(h−19)²/8) − 0.1
//! weekly(d)   = −0.2 on Saturday and Sunday, 0 otherwise
//! s_i         = 1 + 0.35·i
//! ```
//!
//! Demand is clipped at zero. `feels` uses the noisy temperature.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use chrono::{DateTime, Datelike, Duration, NaiveDate, TimeZone, Timelike, Utc, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{MeterReading, WeatherRecord, WeatherSeries};
use crate::config::KeyValues;
use crate::signal::{TimeSeries, Unit};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_days: usize,
    pub dma_count: usize,
    pub noise_level: f64,
    pub start_date: NaiveDate,
    /// Each DMA's demand is split across this many meters on export.
    pub meters_per_dma: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_days: 365,
            dma_count: 3,
            noise_level: 0.03,
            start_date: NaiveDate::from_ymd_opt(2018, 4, 1).unwrap(),
            meters_per_dma: 2,
        }
    }
}

impl SynthConfig {
    /// Overrides defaults from `seed`, `n_days`, `dma_count`, `noise_level`,
    /// `start_date` and `meters_per_dma` keys.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        Ok(Self {
            seed: kv.get_or("seed", d.seed)?,
            n_days: kv.get_or("n_days", d.n_days)?,
            dma_count: kv.get_or("dma_count", d.dma_count)?,
            noise_level: kv.get_or("noise_level", d.noise_level)?,
            start_date: kv.get_or("start_date", d.start_date)?,
            meters_per_dma: kv.get_or("meters_per_dma", d.meters_per_dma)?,
        })
    }

    pub fn start(&self) -> DateTime<Utc> {
        Utc.from_utc_datetime(&self.start_date.and_hms_opt(0, 0, 0).unwrap())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub demand: BTreeMap<String, TimeSeries>,
    pub weather: WeatherSeries,
}

pub fn dma_name(i: usize) -> String {
    format!("DMA-{}", (b'A' + (i % 26) as u8) as char)
}

pub fn dma_scale(i: usize) -> f64 {
    1.0 + 0.35 * i as f64
}

fn yearly_phase(ts: DateTime<Utc>) -> f64 {
    let day = ts.ordinal0() as f64 + ts.hour() as f64 / 24.0;
    TAU * (day - 20.0) / 365.25
}

/// Noise-free temperature.
pub fn base_temperature(ts: DateTime<Utc>) -> f64 {
    8.0 - 10.0 * yearly_phase(ts).cos() + 3.0 * (TAU * (ts.hour() as f64 - 9.0) / 24.0).sin()
}

pub fn feels_like(temp: f64) -> f64 {
    temp - 2.0 - 0.1 * (10.0 - temp).max(0.0)
}

/// Noise-free demand of DMA `i`.
pub fn base_demand(i: usize, ts: DateTime<Utc>) -> f64 {
    let h = ts.hour() as f64;
    let daily = 0.35 * (-(h - 7.0).powi(2) / 4.5).exp() + 0.25 * (-(h - 19.0).powi(2) / 8.0).exp() - 0.1;
    let weekly = match ts.weekday() {
        Weekday::Sat | Weekday::Sun => -0.2,
        _ => 0.0,
    };
    dma_scale(i) * (1.0 + 0.6 * yearly_phase(ts).cos() + daily + weekly)
}

pub fn synth_generate(config: &SynthConfig) -> Result<SynthData> {
    if config.n_days < 21 {
        return Err(Error::contract(format!(
            "synth: n_days = {} but at least 21 are required",
            config.n_days
        )));
    }
    if config.dma_count == 0 || !(config.noise_level >= 0.0) {
        return Err(Error::contract("synth: dma_count must be positive and noise_level non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let start = config.start();
    let hours = config.n_days * 24;
    let mut temp = Vec::with_capacity(hours);
    let mut feels = Vec::with_capacity(hours);
    let mut demand = vec![Vec::with_capacity(hours); config.dma_count];
    for k in 0..hours {
        let ts = start + Duration::hours(k as i64);
        let t = base_temperature(ts) + 20.0 * config.noise_level * normal();
        temp.push(t);
        feels.push(feels_like(t) + 10.0 * config.noise_level * normal());
        for (i, series) in demand.iter_mut().enumerate() {
            let noisy = base_demand(i, ts) + dma_scale(i) * config.noise_level * normal();
            series.push(noisy.max(0.0));
        }
    }
    Ok(SynthData {
        demand: demand
            .into_iter()
            .enumerate()
            .map(|(i, v)| Ok((dma_name(i), TimeSeries::new(start, v, Unit::Kwh)?)))
            .collect::<Result<_>>()?,
        weather: WeatherSeries {
            max_temp: TimeSeries::new(start, temp, Unit::Celsius)?,
            feels_like: TimeSeries::new(start, feels, Unit::Celsius)?,
        },
    })
}

impl SynthData {
    /// Splits each DMA's demand over `meters` meters with fixed shares
    /// `(m + 1) / Σ(k + 1)`.
    pub fn meter_readings(&self, meters: usize) -> Vec<MeterReading> {
        let meters = meters.max(1);
        let total: f64 = (1..=meters).map(|m| m as f64).sum();
        let mut out = Vec::new();
        for (dma, series) in &self.demand {
            for (k, &v) in series.values.iter().enumerate() {
                for m in 0..meters {
                    out.push(MeterReading {
                        meter_id: format!("{dma}-M{m:02}"),
                        dma_id: dma.clone(),
                        timestamp: series.timestamp(k),
                        consumption_kwh: v * (m + 1) as f64 / total,
                    });
                }
            }
        }
        out.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.meter_id.cmp(&b.meter_id)));
        out
    }

    pub fn weather_records(&self) -> Vec<WeatherRecord> {
        self.weather.to_records()
    }
}
