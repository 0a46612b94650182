//! The `heatcast` command line.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 when input data or a
//! file cannot be used.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use clap::{Args, Parser, Subcommand};

use crate::config::KeyValues;
use crate::dataset::{
    format_timestamp, ingest_meter_csv, ingest_weather_csv, parse_timestamp, synth_generate, write_meter_csv,
    write_weather_csv, FeatureScaler, SampleWindow, SynthConfig,
};
use crate::eval::{evaluate, evaluate_persistence, export_forecast, format_sig9, Evaluation, ForecastRecord};
use crate::models::{load_checkpoint, save_checkpoint, Forecaster, Model, ModelKind};
use crate::pipeline::{
    build_splits, preprocess, train_model, prepare_experiment, CleanData, ExperimentConfig, METER_FILE, WEATHER_FILE,
};
use crate::signal::{seasonal_decompose, DEFAULT_Z_THRESHOLD};
use crate::training::{grid_search, TrainHistory};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "heatcast", about = "Day-ahead district heating demand forecasting", arg_required_else_help = true)]
struct Cli {
    /// Seed for data generation, initialisation and shuffling.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["lstm", "f", "fprime"], default_value = "fprime")]
    model: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic meter and weather CSVs.
    Synth {
        #[arg(long, default_value_t = 365)]
        days: usize,
        #[arg(long, default_value = "data/raw")]
        out: PathBuf,
    },
    /// Aggregate meters per DMA, remove outliers, impute gaps.
    Preprocess {
        #[arg(long, default_value = "data/raw")]
        input: PathBuf,
        #[arg(long, default_value = "data/clean")]
        out: PathBuf,
    },
    /// Write trend/seasonal/residual components of each DMA's demand.
    Decompose {
        #[command(flatten)]
        data: DataArg,
        #[arg(long, default_value_t = 24)]
        period: usize,
        #[arg(long, default_value = "decomposition.csv")]
        out: PathBuf,
    },
    /// Train a model and save a checkpoint.
    Train {
        #[command(flatten)]
        data: DataArg,
        #[arg(long, default_value = "model.ckpt")]
        out: PathBuf,
        /// Also write per-epoch losses here.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Search the `grid.<key> = v1, v2, ...` entries of the config
        /// (default `grid.train.learning_rate = 0.01, 0.001`) and keep the
        /// model with the lowest validation loss.
        #[arg(long)]
        grid: bool,
    },
    /// Score a checkpoint on the test year and write a metrics report.
    Evaluate {
        #[command(flatten)]
        data: DataArg,
        #[arg(long, default_value = "model.ckpt")]
        checkpoint: PathBuf,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// Also export every hourly forecast as CSV.
        #[arg(long)]
        forecasts: Option<PathBuf>,
    },
    /// Forecast the 24 hours after one origin for every DMA.
    Forecast {
        #[command(flatten)]
        data: DataArg,
        #[arg(long, default_value = "model.ckpt")]
        checkpoint: PathBuf,
        /// Midnight origin (RFC 3339); defaults to the last test origin.
        #[arg(long)]
        origin: Option<String>,
        #[arg(long, default_value = "forecast.csv")]
        out: PathBuf,
    },
    /// Emit CSV data for external plotting.
    PlotData {
        #[command(flatten)]
        data: DataArg,
        /// Adds a one-week forecast against persistence.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct DataArg {
    /// Directory written by `preprocess`.
    #[arg(long, default_value = "data/clean")]
    data: PathBuf,
}

/// Runs the command line on `argv` (including the program name) and
/// returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn load_config(cli: &Cli) -> Result<KeyValues> {
    match &cli.config {
        Some(p) => KeyValues::load(p),
        None => Ok(KeyValues::default()),
    }
}

fn sub_config(kv: &KeyValues, prefix: &str) -> KeyValues {
    let mut out = KeyValues::default();
    for (k, v) in kv.with_prefix(prefix) {
        out.set(k, v);
    }
    out
}

fn model_kind(cli: &Cli) -> ModelKind {
    cli.model.parse().expect("clap restricts the model names")
}

/// Search space from `grid.*` config entries.
fn grid_space(kv: &KeyValues) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut space = BTreeMap::new();
    for (key, raw) in kv.with_prefix("grid.") {
        let values = raw
            .split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| Error::format(None, format!("invalid grid values {raw:?} for `{key}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        space.insert(key.to_string(), values);
    }
    if space.is_empty() {
        space.insert("train.learning_rate".to_string(), vec![0.01, 0.001]);
    }
    Ok(space)
}

fn train_grid(kind: ModelKind, kv: &KeyValues, clean: &CleanData, seed: u64) -> Result<(Model, TrainHistory, FeatureScaler)> {
    let space = grid_space(kv)?;
    // features and splits only change the prepared data when searched over
    let model_only = space
        .keys()
        .all(|k| ["train.", "lstm.", "f.", "fprime."].iter().any(|p| k.starts_with(p)));
    let shared = if model_only {
        Some(prepare_experiment(clean, &ExperimentConfig::from_key_values(kv)?)?)
    } else {
        None
    };
    let mut best: Option<(f64, Model, TrainHistory, FeatureScaler)> = None;
    let (point, results) = grid_search(&space, seed, |point, seed| {
        let mut cell = kv.clone();
        for (k, v) in point {
            cell.set(k.as_str(), v);
        }
        let config = ExperimentConfig::from_key_values(&cell)?;
        let own;
        let exp = match &shared {
            Some(e) => e,
            None => {
                own = prepare_experiment(clean, &config)?;
                &own
            }
        };
        let (model, history) = train_model(kind, exp, &config, seed)?;
        let loss = history.best_val_loss().unwrap_or(f64::NAN);
        println!("grid {point:?} seed={seed} val_loss={loss:.9e}");
        let rank = if loss.is_nan() { f64::INFINITY } else { loss };
        if best.as_ref().map_or(true, |b| rank < b.0) {
            best = Some((rank, model, history, exp.scaler.clone()));
        }
        Ok(loss)
    })?;
    println!("grid: {} cells, best {point:?}", results.len());
    let (_, model, history, scaler) = best.ok_or_else(|| Error::contract("grid search trained nothing"))?;
    Ok((model, history, scaler))
}

fn run(cli: &Cli) -> Result<()> {
    let kv = load_config(cli)?;
    match &cli.command {
        Command::Synth { days, out } => synth(cli, &kv, *days, out),
        Command::Preprocess { input, out } => run_preprocess(&kv, input, out),
        Command::Decompose { data, period, out } => decompose(&data.data, *period, out),
        Command::Train { data, out, log, grid } => {
            let clean = CleanData::read(&data.data)?;
            let kind = model_kind(cli);
            let (model, history, scaler) = if *grid {
                train_grid(kind, &kv, &clean, cli.seed)?
            } else {
                let mut config = ExperimentConfig::from_key_values(&kv)?;
                config.train.verbose = true;
                config.train.log_path = log.clone();
                let exp = prepare_experiment(&clean, &config)?;
                println!(
                    "training {kind} on {} windows, validating on {}",
                    exp.train.len(),
                    exp.val.len()
                );
                let (model, history) = train_model(kind, &exp, &config, cli.seed)?;
                (model, history, exp.scaler)
            };
            save_checkpoint(&model, Some(&scaler), out)?;
            println!(
                "best epoch {:?} (val loss {:?}); {} parameters saved to {}",
                history.best_epoch,
                history.best_val_loss(),
                model.params().numel(),
                out.display()
            );
            Ok(())
        }
        Command::Evaluate {
            data,
            checkpoint,
            out,
            forecasts,
        } => {
            let (model, scaler, test) = load_for_inference(&kv, &data.data, checkpoint)?;
            let eval = evaluate(&model, model.kind().name(), &scaler.layout, &test, &scaler)?;
            let base = evaluate_persistence(&test)?;
            std::fs::write(out, eval.report.to_json() + "\n").map_err(|e| Error::io(out, e))?;
            for r in [&eval.report, &base.report] {
                println!(
                    "{:<12} MAE {} ± {} kWh   MAPE {} ± {} %",
                    r.model,
                    format_sig9(r.aggregate.mae.mean),
                    format_sig9(r.aggregate.mae.std),
                    format_sig9(r.aggregate.mape.mean),
                    format_sig9(r.aggregate.mape.std)
                );
            }
            if let Some(path) = forecasts {
                let mut records = eval.records;
                records.extend(base.records);
                export_forecast(&records, path)?;
            }
            Ok(())
        }
        Command::Forecast {
            data,
            checkpoint,
            origin,
            out,
        } => {
            let (model, scaler, test) = load_for_inference(&kv, &data.data, checkpoint)?;
            let origin = match origin {
                Some(raw) => parse_timestamp(raw).map_err(|m| Error::format(None, m))?,
                None => test.iter().map(|w| w.origin).max().expect("test split is non-empty"),
            };
            let windows: Vec<SampleWindow> = test.into_iter().filter(|w| w.origin == origin).collect();
            if windows.is_empty() {
                return Err(Error::contract(format!(
                    "no test window starts at {}",
                    format_timestamp(origin)
                )));
            }
            let eval = evaluate(&model, model.kind().name(), &scaler.layout, &windows, &scaler)?;
            export_forecast(&eval.records, out)?;
            println!("{} forecast rows written to {}", eval.records.len(), out.display());
            Ok(())
        }
        Command::PlotData { data, checkpoint, out } => plot_data(&kv, &data.data, checkpoint.as_deref(), out),
    }
}

fn synth(cli: &Cli, kv: &KeyValues, days: usize, out: &Path) -> Result<()> {
    let config = SynthConfig {
        seed: cli.seed,
        n_days: days,
        ..SynthConfig::from_key_values(&sub_config(kv, "synth."))?
    };
    let data = synth_generate(&config)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let meters = data.meter_readings(config.meters_per_dma);
    write_meter_csv(out.join(METER_FILE), &meters)?;
    write_weather_csv(out.join(WEATHER_FILE), &data.weather_records())?;
    println!(
        "{} meter rows for {} DMAs over {days} days written to {}",
        meters.len(),
        data.demand.len(),
        out.display()
    );
    Ok(())
}

fn run_preprocess(kv: &KeyValues, input: &Path, out: &Path) -> Result<()> {
    let meters = ingest_meter_csv(input.join(METER_FILE))?;
    let weather = ingest_weather_csv(input.join(WEATHER_FILE))?;
    for (file, errors) in [(METER_FILE, &meters.errors), (WEATHER_FILE, &weather.errors)] {
        for e in errors {
            eprintln!("warning: {file} row {}: {}", e.row, e.message);
        }
    }
    let z = kv.get_or("clean.z_threshold", DEFAULT_Z_THRESHOLD)?;
    let (clean, summary) = preprocess(&meters.records, &weather.records, z)?;
    clean.write(out)?;
    println!(
        "{} hours, {} DMAs; outliers {:?}; imputed {:?}; written to {}",
        summary.hours,
        clean.demand.len(),
        summary.outliers,
        summary.imputed,
        out.display()
    );
    Ok(())
}

fn decompose(data: &Path, period: usize, out: &Path) -> Result<()> {
    let clean = CleanData::read(data)?;
    let mut rows = vec!["timestamp,dma_id,observed_kwh,trend_kwh,seasonal_kwh,residual_kwh".to_string()];
    for (dma, series) in &clean.demand {
        let d = seasonal_decompose(series, period)?;
        for (i, &x) in series.values.iter().enumerate() {
            rows.push(format!(
                "{},{dma},{},{},{},{}",
                format_timestamp(series.timestamp(i)),
                format_sig9(x),
                format_sig9(d.trend[i]),
                format_sig9(d.seasonal[i]),
                format_sig9(d.residual[i])
            ));
        }
    }
    write_lines(out, &rows)
}

fn write_lines(path: &Path, rows: &[String]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for r in rows {
        writeln!(f, "{r}").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

/// Model, its scaler and the test windows built with the same feature
/// settings.
fn load_for_inference(kv: &KeyValues, data: &Path, checkpoint: &Path) -> Result<(Model, FeatureScaler, Vec<SampleWindow>)> {
    let config = ExperimentConfig::from_key_values(kv)?;
    let (model, scaler) = load_checkpoint(checkpoint)?;
    let scaler = scaler.ok_or_else(|| Error::format(None, "checkpoint carries no feature scaler"))?;
    if scaler.difference_target != config.features.difference_demand {
        return Err(Error::contract(
            "checkpoint was trained with a different features.difference_demand setting",
        ));
    }
    let clean = CleanData::read(data)?;
    let (layout, splits) = build_splits(&clean, &config)?;
    if layout != scaler.layout {
        return Err(Error::contract("checkpoint channel layout differs from the data's"));
    }
    Ok((model, scaler, splits.test))
}

fn plot_data(kv: &KeyValues, data: &Path, checkpoint: Option<&Path>, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let config = ExperimentConfig::from_key_values(kv)?;
    let clean = CleanData::read(data)?;
    let exp = prepare_experiment(&clean, &config)?;
    let first = &exp.splits.test[0];

    let prepared = exp.scaler.prepare(first)?;
    let names = exp.layout.all();
    let mut rows = vec!["channel,scale_index,hour,value".to_string()];
    for (tensor, offset) in [(&prepared.endogenous, 0), (&prepared.exogenous, exp.layout.n_c())] {
        let [c, s, h] = tensor.shape()[..] else { unreachable!() };
        for ci in 0..c {
            for j in 0..s {
                for b in 0..h {
                    let v = tensor.data()[(ci * s + j) * h + b];
                    rows.push(format!("{},{j},{b},{}", names[offset + ci], format_sig9(v)));
                }
            }
        }
    }
    write_lines(&out.join("scalogram.csv"), &rows)?;

    let week: Vec<SampleWindow> = exp
        .splits
        .test
        .iter()
        .filter(|w| w.dma_id == first.dma_id && w.origin < first.origin + Duration::days(7))
        .cloned()
        .collect();
    let mut evals: Vec<Evaluation> = vec![evaluate_persistence(&week)?];
    if let Some(path) = checkpoint {
        let (model, scaler) = load_checkpoint(path)?;
        let scaler = scaler.unwrap_or(exp.scaler.clone());
        evals.push(evaluate(&model, model.kind().name(), &exp.layout, &week, &scaler)?);
    }
    let records: Vec<ForecastRecord> = evals.into_iter().flat_map(|e| e.records).collect();
    export_forecast(&records, out.join("forecast_week.csv"))?;

    let mut rows = vec!["timestamp,dma_id,demand_kwh,max_temp_c,feels_like_c".to_string()];
    let series = &clean.demand[&first.dma_id];
    for (i, &v) in series.values.iter().enumerate() {
        let ts: DateTime<Utc> = series.timestamp(i);
        let w = clean.weather.max_temp.index_of(ts);
        let (t, f) = w.map_or((f64::NAN, f64::NAN), |k| (clean.weather.max_temp.values[k], clean.weather.feels_like.values[k]));
        rows.push(format!(
            "{},{},{},{},{}",
            format_timestamp(ts),
            first.dma_id,
            format_sig9(v),
            format_sig9(t),
            format_sig9(f)
        ));
    }
    write_lines(&out.join("series.csv"), &rows)?;
    println!("plot data written to {}", out.display());
    Ok(())
}

