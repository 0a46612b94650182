//! Trains F and F' on one year of synthetic data and compares test-year
//! MAE/MAPE with the lag-24 persistence baseline.
//!
//! ```text
//! cargo run --release --example compare_models -- [seed] [max_epochs] [learning_rate]
//! ```

use std::time::Instant;

use heatcast::dataset::SynthConfig;
use heatcast::models::{Forecaster, ModelKind};
use heatcast::pipeline::{evaluate_baseline, evaluate_model, prepare_experiment, train_model, CleanData, ExperimentConfig};

fn main() -> heatcast::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(42, |s| s.parse().expect("seed"));
    let mut config = ExperimentConfig::default();
    if let Some(e) = args.next() {
        config.train.max_epochs = e.parse().expect("max_epochs");
    }
    if let Some(lr) = args.next() {
        config.train.learning_rate = lr.parse().expect("learning_rate");
    }

    let data = CleanData::synthetic(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })?;
    let exp = prepare_experiment(&data, &config)?;
    println!(
        "windows: train {}  val {}  test {}",
        exp.splits.train.len(),
        exp.splits.val.len(),
        exp.splits.test.len()
    );

    let base = evaluate_baseline(&exp)?.report;
    println!(
        "{:<12} MAE {:.4} ± {:.4} kWh  MAPE {:.2} ± {:.2} %",
        "persistence", base.aggregate.mae.mean, base.aggregate.mae.std, base.aggregate.mape.mean, base.aggregate.mape.std
    );
    for kind in [ModelKind::F, ModelKind::FPrime] {
        let t = Instant::now();
        let (model, history) = train_model(kind, &exp, &config, seed)?;
        let r = evaluate_model(&model, &exp)?.report;
        println!(
            "{:<12} MAE {:.4} ± {:.4} kWh  MAPE {:.2} ± {:.2} %  ({} params, {} epochs, best {:?}, {:.1}s)",
            kind.name(),
            r.aggregate.mae.mean,
            r.aggregate.mae.std,
            r.aggregate.mape.mean,
            r.aggregate.mape.std,
            model.params().numel(),
            history.epochs(),
            history.best_epoch,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
