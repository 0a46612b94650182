//! Forecast metrics in kWh, evaluation reports and CSV export.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::dataset::{format_timestamp, ChannelLayout, FeatureScaler, SampleWindow};
use crate::models::Forecaster;
use crate::{Error, Result};

/// Guards MAPE against zero-demand hours.
pub const MAPE_EPSILON: f64 = 1e-6;

pub const FORECAST_HEADER: [&str; 5] = ["timestamp", "dma_id", "model", "forecast_kwh", "actual_kwh"];

fn check_lengths(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(Error::contract(format!(
            "metric inputs must be non-empty and equal length (got {} and {})",
            pred.len(),
            actual.len()
        )));
    }
    Ok(())
}

pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred, actual)?;
    Ok(pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / pred.len() as f64)
}

/// Mean absolute percentage error in percent.
pub fn mape(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred, actual)?;
    let total: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).abs() / a.abs().max(MAPE_EPSILON))
        .sum();
    Ok(100.0 * total / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    /// Sorts before reducing so the result does not depend on input order.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        dev.sort_by(f64::total_cmp);
        Self {
            mean,
            std: (dev.iter().sum::<f64>() / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub windows: usize,
    pub mae: MeanStd,
    pub mape: MeanStd,
}

impl MetricSummary {
    fn of(errors: &[WindowMetrics]) -> Self {
        let maes: Vec<f64> = errors.iter().map(|e| e.mae).collect();
        let mapes: Vec<f64> = errors.iter().map(|e| e.mape).collect();
        Self {
            windows: errors.len(),
            mae: MeanStd::of(&maes),
            mape: MeanStd::of(&mapes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub dma_id: String,
    pub origin: DateTime<Utc>,
    pub mae: f64,
    pub mape: f64,
}

/// Per-DMA and aggregate MAE (kWh) and MAPE (%) as mean ± std over test
/// windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub aggregate: MetricSummary,
    pub per_dma: BTreeMap<String, MetricSummary>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format(None, format!("metrics report: {e}")))
    }
}

/// One hourly row of an exported forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub timestamp: DateTime<Utc>,
    pub dma_id: String,
    pub model: String,
    pub forecast_kwh: f64,
    pub actual_kwh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub windows: Vec<WindowMetrics>,
    pub records: Vec<ForecastRecord>,
}

/// Scores kWh forecasts against each window's target.
pub fn evaluate_forecasts(model: &str, windows: &[SampleWindow], forecasts: &[Vec<f64>]) -> Result<Evaluation> {
    if windows.len() != forecasts.len() {
        return Err(Error::contract(format!(
            "{} forecasts for {} windows",
            forecasts.len(),
            windows.len()
        )));
    }
    if windows.is_empty() {
        return Err(Error::contract("evaluation needs at least one window"));
    }
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.sort_by(|&a, &b| {
        (windows[a].origin, &windows[a].dma_id).cmp(&(windows[b].origin, &windows[b].dma_id))
    });
    let mut per_window = Vec::with_capacity(windows.len());
    let mut records = Vec::new();
    for i in order {
        let (w, f) = (&windows[i], &forecasts[i]);
        per_window.push(WindowMetrics {
            dma_id: w.dma_id.clone(),
            origin: w.origin,
            mae: mae(f, &w.target)?,
            mape: mape(f, &w.target)?,
        });
        for (h, (&p, &a)) in f.iter().zip(&w.target).enumerate() {
            records.push(ForecastRecord {
                timestamp: w.origin + Duration::hours(h as i64),
                dma_id: w.dma_id.clone(),
                model: model.to_string(),
                forecast_kwh: p,
                actual_kwh: a,
            });
        }
    }
    let mut by_dma: BTreeMap<String, Vec<WindowMetrics>> = BTreeMap::new();
    for m in &per_window {
        by_dma.entry(m.dma_id.clone()).or_default().push(m.clone());
    }
    let report = MetricsReport {
        model: model.to_string(),
        aggregate: MetricSummary::of(&per_window),
        per_dma: by_dma.iter().map(|(k, v)| (k.clone(), MetricSummary::of(v))).collect(),
    };
    Ok(Evaluation {
        report,
        windows: per_window,
        records,
    })
}

/// Runs `model` on every window, decodes its output to kWh and scores it.
///
/// `layout` is the channel layout the windows were built with; it must match
/// the one the scaler (and therefore the model) was fitted on.
pub fn evaluate<M: Forecaster + ?Sized>(
    model: &M,
    name: &str,
    layout: &ChannelLayout,
    windows: &[SampleWindow],
    scaler: &FeatureScaler,
) -> Result<Evaluation> {
    if &scaler.layout != layout {
        return Err(Error::contract(format!(
            "windows carry channels {:?} but the model was trained on {:?}",
            layout.all(),
            scaler.layout.all()
        )));
    }
    let forecasts = windows
        .iter()
        .map(|w| {
            let prepared = scaler.prepare(w)?;
            scaler.decode_forecast(&model.predict(&prepared)?, w)
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_forecasts(name, windows, &forecasts)
}

/// Lag-24 persistence: tomorrow repeats today.
pub fn persistence_forecasts(windows: &[SampleWindow]) -> Vec<Vec<f64>> {
    windows.iter().map(|w| w.seed.clone()).collect()
}

pub fn evaluate_persistence(windows: &[SampleWindow]) -> Result<Evaluation> {
    evaluate_forecasts("persistence", windows, &persistence_forecasts(windows))
}

/// Shortest decimal form of `v` rounded to 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("float formatting round-trips");
    rounded.to_string()
}

pub fn export_forecast(records: &[ForecastRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::format(None, format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(FORECAST_HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            format_timestamp(r.timestamp),
            r.dma_id.clone(),
            r.model.clone(),
            format_sig9(r.forecast_kwh),
            format_sig9(r.actual_kwh),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`export_forecast`].
pub fn read_forecast(path: impl AsRef<Path>) -> Result<Vec<ForecastRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::format(None, format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format(Some(1), e.to_string()))?
        .clone();
    if headers.iter().ne(FORECAST_HEADER) {
        return Err(Error::format(Some(1), format!("expected header {}", FORECAST_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::format(Some(line), e.to_string()))?;
        let num = |k: usize| {
            row[k]
                .parse::<f64>()
                .map_err(|e| Error::format(Some(line), format!("{}: {e}", FORECAST_HEADER[k])))
        };
        out.push(ForecastRecord {
            timestamp: crate::dataset::parse_timestamp(&row[0]).map_err(|m| Error::format(Some(line), m))?,
            dma_id: row[1].to_string(),
            model: row[2].to_string(),
            forecast_kwh: num(3)?,
            actual_kwh: num(4)?,
        });
    }
    Ok(out)
}
