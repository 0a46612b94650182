//! End-to-end workflow: raw CSVs to cleaned hourly series, feature windows,
//! splits, a fitted scaler, a trained model and an evaluation.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, TimeZone, Utc};

use crate::config::KeyValues;
use crate::dataset::{
    aggregate_dma, build_feature_set, format_timestamp, make_splits, parse_timestamp, synth_generate,
    write_weather_csv, ChannelLayout, FeatureConfig, FeatureScaler, MeterReading, PreparedSample, SampleWindow, SplitSpec, Splits,
    SynthConfig, WeatherRecord, WeatherSeries,
};
use crate::eval::{evaluate, evaluate_persistence, Evaluation};
use crate::models::{ConvSpec, LstmConfig, LstmModel, Model, ModelF, ModelFConfig, ModelFPrime, ModelFPrimeConfig, ModelKind};
use crate::signal::{impute_missing, remove_outliers, TimeSeries, Unit, DEFAULT_Z_THRESHOLD, SCALE_COUNT};
use crate::training::{train, TrainConfig, TrainHistory};
use crate::{Error, Result};

pub const DEMAND_FILE: &str = "demand.csv";
pub const WEATHER_FILE: &str = "weather.csv";
pub const METER_FILE: &str = "meters.csv";
pub const DEMAND_HEADER: [&str; 3] = ["timestamp", "dma_id", "demand_kwh"];

/// Cleaned, gap-free hourly demand per DMA and weather on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanData {
    pub demand: BTreeMap<String, TimeSeries>,
    pub weather: WeatherSeries,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreprocessSummary {
    pub hours: usize,
    pub outliers: BTreeMap<String, usize>,
    pub imputed: BTreeMap<String, usize>,
    pub weather_imputed: usize,
}

fn slice_series(s: &TimeSeries, start: DateTime<Utc>, len: usize) -> Result<TimeSeries> {
    let off = s
        .index_of(start)
        .ok_or_else(|| Error::contract(format!("{} is outside the series", format_timestamp(start))))?;
    TimeSeries::new(start, s.values[off..off + len].to_vec(), s.unit)
}

/// Aggregates meters per DMA, removes demand outliers, imputes gaps and
/// trims demand and weather to their common hours.
pub fn preprocess(
    meters: &[MeterReading],
    weather: &[WeatherRecord],
    z_threshold: f64,
) -> Result<(CleanData, PreprocessSummary)> {
    if meters.is_empty() {
        return Err(Error::format(None, "no valid meter readings"));
    }
    let demand = aggregate_dma(meters);
    let weather = WeatherSeries::from_records(weather)?;
    let first = demand.values().next().expect("non-empty");
    let start = first.start().max(weather.start());
    let end = first.end().min(weather.max_temp.end());
    if end <= start {
        return Err(Error::format(None, "meter and weather data do not overlap in time"));
    }
    let hours = ((end - start).num_hours()) as usize;
    let mut summary = PreprocessSummary {
        hours,
        ..Default::default()
    };
    let weather = weather.slice(start, hours)?;
    let weather_missing = weather.max_temp.missing_count() + weather.feels_like.missing_count();
    let weather = WeatherSeries {
        max_temp: impute_missing(&weather.max_temp)?,
        feels_like: impute_missing(&weather.feels_like)?,
    };
    summary.weather_imputed = weather_missing;
    let mut clean = BTreeMap::new();
    for (dma, series) in demand {
        let series = slice_series(&series, start, hours)?;
        let (trimmed, flags) = remove_outliers(&series, z_threshold)?;
        summary.outliers.insert(dma.clone(), flags.iter().filter(|f| **f).count());
        summary.imputed.insert(dma.clone(), trimmed.missing_count());
        clean.insert(dma, impute_missing(&trimmed)?);
    }
    Ok((CleanData { demand: clean, weather }, summary))
}

impl CleanData {
    /// Synthetic data passed through the same meter-level path as real
    /// files.
    pub fn synthetic(config: &SynthConfig) -> Result<Self> {
        let data = synth_generate(config)?;
        let meters = data.meter_readings(config.meters_per_dma);
        Ok(preprocess(&meters, &data.weather_records(), DEFAULT_Z_THRESHOLD)?.0)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(DEMAND_FILE);
        let io = |e: csv::Error| Error::format(None, format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(DEMAND_HEADER).map_err(io)?;
        for (dma, s) in &self.demand {
            for (i, v) in s.values.iter().enumerate() {
                w.write_record([format_timestamp(s.timestamp(i)), dma.clone(), v.to_string()])
                    .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        write_weather_csv(dir.join(WEATHER_FILE), &self.weather.to_records())
    }

    /// Reads a directory written by [`CleanData::write`].
    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(DEMAND_FILE);
        let mut reader = csv::Reader::from_path(&path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(e) => Error::io(&path, e),
            other => Error::format(None, format!("{other:?}")),
        })?;
        let header = reader.headers().map_err(|e| Error::format(Some(1), e.to_string()))?;
        if header.iter().ne(DEMAND_HEADER) {
            return Err(Error::format(Some(1), format!("expected header {}", DEMAND_HEADER.join(","))));
        }
        let mut rows: BTreeMap<String, Vec<(DateTime<Utc>, f64)>> = BTreeMap::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::format(Some(line), e.to_string()))?;
            let ts = parse_timestamp(&rec[0]).map_err(|m| Error::format(Some(line), m))?;
            let v: f64 = rec[2]
                .parse()
                .map_err(|_| Error::format(Some(line), format!("demand_kwh {:?} is not a number", &rec[2])))?;
            rows.entry(rec[1].to_string()).or_default().push((ts, v));
        }
        let mut demand = BTreeMap::new();
        for (dma, mut points) in rows {
            points.sort_by_key(|p| p.0);
            let start = points[0].0;
            for (k, (ts, _)) in points.iter().enumerate() {
                if (*ts - start).num_hours() != k as i64 {
                    return Err(Error::format(
                        None,
                        format!("{dma}: demand is not a gap-free hourly series at {}", format_timestamp(*ts)),
                    ));
                }
            }
            let values = points.into_iter().map(|p| p.1).collect();
            demand.insert(dma, TimeSeries::new(start, values, Unit::Kwh)?);
        }
        if demand.is_empty() {
            return Err(Error::format(None, format!("{} holds no demand rows", path.display())));
        }
        let weather = crate::dataset::ingest_weather_csv(dir.join(WEATHER_FILE))?;
        if let Some(e) = weather.errors.first() {
            return Err(Error::format(Some(e.row), e.message.clone()));
        }
        Ok(Self {
            demand,
            weather: WeatherSeries::from_records(&weather.records)?,
        })
    }
}

/// Everything configurable about a run, with laptop-sized model defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub features: FeatureConfig,
    pub split: SplitSpec,
    pub train: TrainConfig,
    pub scale_count: usize,
    pub lstm: LstmConfig,
    pub f: ModelFConfig,
    pub fprime: ModelFPrimeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            split: SplitSpec::default(),
            train: TrainConfig {
                max_epochs: 60,
                ..TrainConfig::default()
            },
            scale_count: SCALE_COUNT,
            lstm: LstmConfig::default(),
            f: ModelFConfig::desk(),
            fprime: ModelFPrimeConfig::desk(),
        }
    }
}

fn list(kv: &KeyValues, key: &str, default: Vec<usize>) -> Result<Vec<usize>> {
    match kv.get(key) {
        None => Ok(default),
        Some("") => Ok(Vec::new()),
        Some(raw) => raw
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| Error::format(None, format!("invalid list {raw:?} for `{key}`")))
            })
            .collect(),
    }
}

impl ExperimentConfig {
    /// Reads overrides such as `train.max_epochs`, `split.test_year`,
    /// `features.difference_demand`, `features.decomposition_period`, `f.maps = 8, 8`, `f.dense = 32`,
    /// `fprime.maps`, `fprime.attn_dim`, `fprime.heads`, `fprime.dense`,
    /// `lstm.layers` and `lstm.hidden`.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let f_maps = list(kv, "f.maps", d.f.convs.iter().map(|c| c.out_channels).collect())?;
        let fp_maps: usize = kv.get_or("fprime.maps", d.fprime.endo_conv.out_channels)?;
        Ok(Self {
            features: FeatureConfig {
                difference_demand: kv.get_or("features.difference_demand", d.features.difference_demand)?,
                difference_temperature: kv
                    .get_or("features.difference_temperature", d.features.difference_temperature)?,
                decomposition_period: kv.get_or("features.decomposition_period", d.features.decomposition_period)?,
                ..d.features
            },
            split: SplitSpec {
                test_year: kv.get_or("split.test_year", d.split.test_year)?,
                train_fraction: kv.get_or("split.train_fraction", d.split.train_fraction)?,
            },
            train: TrainConfig {
                batch_size: kv.get_or("train.batch_size", d.train.batch_size)?,
                learning_rate: kv.get_or("train.learning_rate", d.train.learning_rate)?,
                max_epochs: kv.get_or("train.max_epochs", d.train.max_epochs)?,
                patience: kv.get_or("train.patience", d.train.patience)?,
                ..d.train
            },
            scale_count: d.scale_count,
            lstm: LstmConfig {
                layers: kv.get_or("lstm.layers", d.lstm.layers)?,
                hidden: kv.get_or("lstm.hidden", d.lstm.hidden)?,
                ..d.lstm
            },
            f: ModelFConfig {
                convs: f_maps.into_iter().map(|m| ConvSpec::same(m, 3)).collect(),
                dense: list(kv, "f.dense", d.f.dense)?,
                ..d.f
            },
            fprime: ModelFPrimeConfig {
                endo_conv: ConvSpec::same(fp_maps, 3),
                exo_conv: ConvSpec::same(fp_maps, 3),
                attn_dim: kv.get_or("fprime.attn_dim", d.fprime.attn_dim)?,
                heads: kv.get_or("fprime.heads", d.fprime.heads)?,
                residual: kv.get_or("fprime.residual", d.fprime.residual)?,
                dense: list(kv, "fprime.dense", d.fprime.dense)?,
                ..d.fprime
            },
        })
    }

    /// Freshly initialised model of `kind` sized for `layout`.
    pub fn build_model(&self, kind: ModelKind, layout: &ChannelLayout, seed: u64) -> Result<Model> {
        let (h, w) = (self.scale_count, self.features.window);
        Ok(match kind {
            ModelKind::Lstm => Model::Lstm(LstmModel::new(
                LstmConfig {
                    input_dim: layout.total(),
                    horizon: w,
                    ..self.lstm.clone()
                },
                seed,
            )),
            ModelKind::F => Model::F(ModelF::new(
                ModelFConfig {
                    in_channels: layout.total(),
                    height: h,
                    width: w,
                    horizon: w,
                    ..self.f.clone()
                },
                seed,
            )?),
            ModelKind::FPrime => Model::FPrime(ModelFPrime::new(
                ModelFPrimeConfig {
                    endo_channels: layout.n_c(),
                    exo_channels: layout.n_exogenous(),
                    height: h,
                    width: w,
                    horizon: w,
                    ..self.fprime.clone()
                },
                seed,
            )?),
        })
    }
}

/// Feature windows, splits, the fitted scaler and model-ready training and
/// validation samples.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub layout: ChannelLayout,
    pub splits: Splits,
    pub scaler: FeatureScaler,
    pub train: Vec<PreparedSample>,
    pub val: Vec<PreparedSample>,
}

pub fn test_year_start(year: i32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap()
}

/// Feature windows of every DMA split into train, validation and test.
pub fn build_splits(data: &CleanData, config: &ExperimentConfig) -> Result<(ChannelLayout, Splits)> {
    let mut features = config.features.clone();
    features.profile_fit_end.get_or_insert(test_year_start(config.split.test_year));
    let set = build_feature_set(&data.demand, &data.weather, &features)?;
    Ok((set.layout, make_splits(set.windows, &config.split)?))
}

pub fn prepare_experiment(data: &CleanData, config: &ExperimentConfig) -> Result<Experiment> {
    let (layout, splits) = build_splits(data, config)?;
    let scaler = FeatureScaler::fit(&splits.train, &layout, config.features.difference_demand, config.scale_count)?;
    let prep = |ws: &[SampleWindow]| ws.iter().map(|w| scaler.prepare(w)).collect::<Result<Vec<_>>>();
    Ok(Experiment {
        train: prep(&splits.train)?,
        val: prep(&splits.val)?,
        layout,
        splits,
        scaler,
    })
}

/// Trains a fresh model of `kind`; `seed` drives both initialisation and
/// batch shuffling.
pub fn train_model(
    kind: ModelKind,
    experiment: &Experiment,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(Model, TrainHistory)> {
    let model = config.build_model(kind, &experiment.layout, seed)?;
    let train_config = TrainConfig {
        seed,
        ..config.train.clone()
    };
    train(&model, &experiment.train, &experiment.val, &train_config)
}

pub fn evaluate_model(model: &Model, experiment: &Experiment) -> Result<Evaluation> {
    evaluate(
        model,
        model.kind().name(),
        &experiment.layout,
        &experiment.splits.test,
        &experiment.scaler,
    )
}

pub fn evaluate_baseline(experiment: &Experiment) -> Result<Evaluation> {
    evaluate_persistence(&experiment.splits.test)
}
