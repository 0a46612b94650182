use std::collections::BTreeMap;
use chrono::{DateTime, Datelike, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::WeatherSeries;
use crate::signal::{cyclical_encode, decompose_values, decompose_with_profile, DecompositionResult, TimeSeries};
use crate::{Error, Result};

pub const ENDOGENOUS_CHANNELS: [&str; 5] = [
    "demand_lag24",
    "demand_lag168",
    "demand_trend",
    "demand_seasonal",
    "demand_residual",
];
pub const WEATHER_CHANNELS: [&str; 4] = ["max_temp", "feels_like", "temp_trend", "temp_residual"];
pub const TIME_CHANNELS: [&str; 4] = ["hour_sin", "hour_cos", "dow_sin", "dow_cos"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Hours per feature window and per forecast.
    pub window: usize,
    pub decomposition_period: usize,
    /// Feed demand lag windows as `x[t] − x[t − difference_lag]` and train on
    /// the same difference of the target.
    pub difference_demand: bool,
    pub difference_temperature: bool,
    pub difference_lag: usize,
    /// Seasonal profiles are estimated on data strictly before this instant
    /// (normally the start of the test year). `None` uses the whole series.
    pub profile_fit_end: Option<DateTime<Utc>>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            window: 24,
            decomposition_period: 24,
            difference_demand: true,
            difference_temperature: false,
            difference_lag: 24,
            profile_fit_end: None,
        }
    }
}

/// Ordered channel names of the two model branches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelLayout {
    pub endogenous: Vec<String>,
    pub weather: Vec<String>,
    pub time: Vec<String>,
}

impl Default for ChannelLayout {
    fn default() -> Self {
        let own = |c: &[&str]| c.iter().map(|s| s.to_string()).collect();
        Self {
            endogenous: own(&ENDOGENOUS_CHANNELS),
            weather: own(&WEATHER_CHANNELS),
            time: own(&TIME_CHANNELS),
        }
    }
}

impl ChannelLayout {
    pub fn n_c(&self) -> usize {
        self.endogenous.len()
    }

    pub fn n_w(&self) -> usize {
        self.weather.len()
    }

    pub fn n_t(&self) -> usize {
        self.time.len()
    }

    pub fn n_exogenous(&self) -> usize {
        self.n_w() + self.n_t()
    }

    pub fn total(&self) -> usize {
        self.n_c() + self.n_exogenous()
    }

    /// All channel names, endogenous first.
    pub fn all(&self) -> Vec<String> {
        self.endogenous
            .iter()
            .chain(&self.weather)
            .chain(&self.time)
            .cloned()
            .collect()
    }
}

/// One forecasting example, one per DMA and midnight origin.
///
/// Channel windows are raw (unscaled) values in [`ChannelLayout`] order;
/// they are rendered to scalograms by
/// [`FeatureScaler::prepare`](super::FeatureScaler::prepare).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    pub dma_id: String,
    pub origin: DateTime<Utc>,
    pub endogenous: Vec<Vec<f64>>,
    pub exogenous: Vec<Vec<f64>>,
    /// Demand over `[origin, origin + 24h)` in kWh.
    pub target: Vec<f64>,
    /// Demand over `[origin − 24h, origin)`: the lag-24 persistence forecast
    /// and the seed for undoing target differencing.
    pub seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub layout: ChannelLayout,
    pub config: FeatureConfig,
    /// Sorted by origin, then DMA.
    pub windows: Vec<SampleWindow>,
}

fn check_aligned(demand: &TimeSeries, other: &TimeSeries) -> Result<()> {
    if demand.start() != other.start() {
        let first = demand.start().min(other.start());
        return Err(Error::contract(format!(
            "demand and weather are misaligned; first mismatched hour is {first}"
        )));
    }
    if demand.len() != other.len() {
        let first = demand.timestamp(demand.len().min(other.len()));
        return Err(Error::contract(format!(
            "demand and weather are misaligned; first mismatched hour is {first}"
        )));
    }
    Ok(())
}

fn lagged_difference(values: &[f64], lag: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| if i >= lag { values[i] - values[i - lag] } else { f64::NAN })
        .collect()
}

fn decompose_fitted(values: &[f64], period: usize, fit_len: usize) -> Result<DecompositionResult> {
    let fitted = decompose_values(&values[..fit_len], period)?;
    decompose_with_profile(values, fitted.profile())
}

fn window_of(values: &[f64], start: isize, len: usize) -> Option<Vec<f64>> {
    if start < 0 || start as usize + len > values.len() {
        return None;
    }
    let w = &values[start as usize..start as usize + len];
    w.iter().all(|v| v.is_finite()).then(|| w.to_vec())
}

fn masked(mask: &[bool], start: isize, len: usize) -> bool {
    start >= 0 && start as usize + len <= mask.len() && mask[start as usize..start as usize + len].iter().all(|m| *m)
}

/// Assembles one window per midnight origin of a single DMA.
///
/// Endogenous channels only read demand strictly before the origin: the
/// lag-24 and lag-168 windows aligned to the forecast day, and the demand
/// decomposition over the last 24 hours whose centred trend needs no
/// post-origin data. Exogenous channels read weather no later than the end
/// of the forecast day.
pub fn build_features(
    dma_id: &str,
    demand: &TimeSeries,
    weather: &WeatherSeries,
    config: &FeatureConfig,
) -> Result<Vec<SampleWindow>> {
    check_aligned(demand, &weather.max_temp)?;
    check_aligned(demand, &weather.feels_like)?;
    for (name, s) in [
        ("demand", demand),
        ("max_temp", &weather.max_temp),
        ("feels_like", &weather.feels_like),
    ] {
        if let Some(i) = s.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "{name} has a missing value at {}; impute before building features",
                s.timestamp(i)
            )));
        }
    }
    let h = config.window;
    let p = config.decomposition_period;
    let n = demand.len();
    let fit_len = config
        .profile_fit_end
        .map(|end| ((end - demand.start()).num_hours().max(0) as usize).min(n))
        .unwrap_or(n);

    let x = &demand.values;
    let lag_src = if config.difference_demand {
        lagged_difference(x, config.difference_lag)
    } else {
        x.clone()
    };
    let temp_src = |s: &TimeSeries| {
        if config.difference_temperature {
            lagged_difference(&s.values, config.difference_lag)
        } else {
            s.values.clone()
        }
    };
    let (max_src, feels_src) = (temp_src(&weather.max_temp), temp_src(&weather.feels_like));
    let demand_dec = decompose_fitted(x, p, fit_len)?;
    let temp_dec = decompose_fitted(&weather.max_temp.values, p, fit_len)?;

    // the centred trend at τ reads up to τ + p/2, so component windows end
    // p/2 hours early: demand ones before the origin, temperature ones
    // before the end of the forecast day
    let comp_shift = (p / 2) as isize;
    let first_midnight = (0..n.min(24)).find(|&i| demand.timestamp(i).hour() == 0);
    let mut out = Vec::new();
    let Some(first_midnight) = first_midnight else {
        return Ok(out);
    };
    for t in (first_midnight..n).step_by(24) {
        let ti = t as isize;
        let hi = h as isize;
        let endo = [
            window_of(&lag_src, ti - hi, h),
            window_of(&lag_src, ti - 168, h),
            masked(&demand_dec.mask, ti - hi - comp_shift, h)
                .then(|| window_of(&demand_dec.trend, ti - hi - comp_shift, h))
                .flatten(),
            window_of(&demand_dec.seasonal, ti - hi - comp_shift, h),
            window_of(&demand_dec.residual, ti - hi - comp_shift, h),
        ];
        let weather_w = [
            window_of(&max_src, ti, h),
            window_of(&feels_src, ti, h),
            masked(&temp_dec.mask, ti - comp_shift, h)
                .then(|| window_of(&temp_dec.trend, ti - comp_shift, h))
                .flatten(),
            window_of(&temp_dec.residual, ti - comp_shift, h),
        ];
        let target = window_of(x, ti, h);
        let seed = window_of(x, ti - hi, h);
        if endo.iter().chain(&weather_w).any(Option::is_none) || target.is_none() || seed.is_none() {
            continue;
        }
        let mut exogenous: Vec<Vec<f64>> = weather_w.into_iter().map(Option::unwrap).collect();
        let mut time = vec![Vec::with_capacity(h); 4];
        for k in 0..h {
            let ts = demand.timestamp(t + k);
            let (hs, hc) = cyclical_encode(ts.hour() as f64, 24.0);
            let dow = ts.weekday().num_days_from_monday() as f64 + ts.hour() as f64 / 24.0;
            let (ds, dc) = cyclical_encode(dow, 7.0);
            for (c, v) in time.iter_mut().zip([hs, hc, ds, dc]) {
                c.push(v);
            }
        }
        exogenous.extend(time);
        out.push(SampleWindow {
            dma_id: dma_id.to_string(),
            origin: demand.timestamp(t),
            endogenous: endo.into_iter().map(Option::unwrap).collect(),
            exogenous,
            target: target.unwrap(),
            seed: seed.unwrap(),
        });
    }
    Ok(out)
}

/// Builds and pools the windows of every DMA.
pub fn build_feature_set(
    demand: &BTreeMap<String, TimeSeries>,
    weather: &WeatherSeries,
    config: &FeatureConfig,
) -> Result<FeatureSet> {
    let mut windows = Vec::new();
    for (dma, series) in demand {
        windows.extend(build_features(dma, series, weather, config)?);
    }
    windows.sort_by(|a, b| a.origin.cmp(&b.origin).then_with(|| a.dma_id.cmp(&b.dma_id)));
    Ok(FeatureSet {
        layout: ChannelLayout::default(),
        config: config.clone(),
        windows,
    })
}
