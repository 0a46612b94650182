//! Saves an untrained F' with its scaler, reloads it and compares outputs.

use chrono::NaiveDate;
use heatcast::dataset::SynthConfig;
use heatcast::models::{load_checkpoint, save_checkpoint, Forecaster, ModelKind};
use heatcast::pipeline::{prepare_experiment, CleanData, ExperimentConfig};

fn main() -> heatcast::Result<()> {
    let data = CleanData::synthetic(&SynthConfig {
        n_days: 45,
        start_date: NaiveDate::from_ymd_opt(2018, 12, 1).unwrap(),
        ..SynthConfig::default()
    })?;
    let config = ExperimentConfig::default();
    let exp = prepare_experiment(&data, &config)?;
    let model = config.build_model(ModelKind::FPrime, &exp.layout, 1)?;

    let dir = std::env::temp_dir().join("heatcast-checkpoint-example");
    std::fs::create_dir_all(&dir).map_err(|e| heatcast::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("fprime.ckpt");
    save_checkpoint(&model, Some(&exp.scaler), &path)?;
    let (back, scaler) = load_checkpoint(&path)?;
    let scaler = scaler.expect("saved with a scaler");

    let w = &exp.splits.test[0];
    let a = model.predict(&exp.scaler.prepare(w)?)?;
    let b = back.predict(&scaler.prepare(w)?)?;
    let same = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    println!(
        "{} bytes, {} parameters, outputs bitwise equal: {same}",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        back.params().numel()
    );
    Ok(())
}
