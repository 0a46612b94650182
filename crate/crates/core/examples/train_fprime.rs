//! Trains the desk-scale F' on synthetic winter data and scores the
//! test days against persistence.
//!
//! ```text
//! cargo run --release --example train_fprime -- [max_epochs]
//! ```

use chrono::NaiveDate;
use heatcast::dataset::SynthConfig;
use heatcast::models::ModelKind;
use heatcast::pipeline::{evaluate_baseline, evaluate_model, prepare_experiment, train_model, CleanData, ExperimentConfig};

fn main() -> heatcast::Result<()> {
    let mut config = ExperimentConfig::default();
    config.train.max_epochs = std::env::args().nth(1).map_or(40, |e| e.parse().expect("max_epochs"));
    config.train.verbose = true;
    let data = CleanData::synthetic(&SynthConfig {
        n_days: 120,
        start_date: NaiveDate::from_ymd_opt(2018, 10, 1).unwrap(),
        ..SynthConfig::default()
    })?;
    let exp = prepare_experiment(&data, &config)?;
    println!("{} train / {} val / {} test windows", exp.train.len(), exp.val.len(), exp.splits.test.len());
    let (model, history) = train_model(ModelKind::FPrime, &exp, &config, 42)?;
    println!("best epoch {:?}", history.best_epoch);
    for r in [evaluate_model(&model, &exp)?.report, evaluate_baseline(&exp)?.report] {
        println!(
            "{:<12} MAE {:.4} ± {:.4} kWh  MAPE {:.2} ± {:.2} %",
            r.model, r.aggregate.mae.mean, r.aggregate.mae.std, r.aggregate.mape.mean, r.aggregate.mape.std
        );
    }
    Ok(())
}
