//! Grid search over learning rate and attention width for F', scored by
//! validation loss after a short training budget.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use heatcast::dataset::SynthConfig;
use heatcast::models::ModelKind;
use heatcast::pipeline::{prepare_experiment, train_model, CleanData, ExperimentConfig};
use heatcast::training::grid_search;

fn main() -> heatcast::Result<()> {
    let data = CleanData::synthetic(&SynthConfig {
        n_days: 90,
        start_date: NaiveDate::from_ymd_opt(2018, 10, 15).unwrap(),
        ..SynthConfig::default()
    })?;
    let base = ExperimentConfig::default();
    let exp = prepare_experiment(&data, &base)?;

    let space = BTreeMap::from([
        ("attn_dim".to_string(), vec![8.0, 16.0]),
        ("learning_rate".to_string(), vec![0.01, 0.001]),
    ]);
    let (best, results) = grid_search(&space, 42, |point, seed| {
        let mut cfg = base.clone();
        cfg.train.max_epochs = 5;
        cfg.train.learning_rate = point["learning_rate"];
        cfg.fprime.attn_dim = point["attn_dim"] as usize;
        let (_, history) = train_model(ModelKind::FPrime, &exp, &cfg, seed)?;
        Ok(history.best_val_loss().unwrap_or(f64::INFINITY))
    })?;
    for r in &results {
        println!("{:?}  seed {:>20}  val_loss {:.5e}", r.point, r.seed, r.val_loss);
    }
    println!("best: {best:?}");
    Ok(())
}
