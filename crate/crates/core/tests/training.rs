mod common;

use std::collections::BTreeMap;

use common::{rng, uniform};
use heatcast::autograd::{dense, Tape, Tensor, Var};
use heatcast::dataset::PreparedSample;
use heatcast::models::{Forecaster, ParamSet, ParamSpec};
use heatcast::training::{
    early_stop_check, epoch_batches, grid_points, grid_search, mean_loss, train, TrainConfig, TrainHistory,
};
use heatcast::{Error, Result};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

const FEATURES: usize = 6;

/// `y = x·W + b` over the flattened sequence.
#[derive(Debug, Clone)]
struct Linear {
    params: ParamSet,
}

impl Linear {
    fn new(seed: u64) -> Self {
        let specs = [
            ParamSpec::glorot("w", &[FEATURES, 24], FEATURES, 24),
            ParamSpec::zeros("b", &[24]),
        ];
        Self {
            params: ParamSet::init(&specs, seed),
        }
    }
}

impl Forecaster for Linear {
    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn forward(&self, tape: &mut Tape, vars: &[Var], input: &PreparedSample) -> Result<Var> {
        let x = tape.leaf(&input.sequence);
        let x = tape.reshape(x, &[1, FEATURES])?;
        let y = dense(tape, x, vars[0], vars[1])?;
        tape.reshape(y, &[24])
    }
}

fn linear_data(seed: u64, n: usize) -> Vec<PreparedSample> {
    let mut r = rng(seed);
    let a = uniform(&mut rng(1000), &[FEATURES, 24], -0.5, 0.5);
    let c: Vec<f64> = (0..24).map(|k| 0.1 * (k as f64 / 24.0)).collect();
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..FEATURES).map(|_| r.gen_range(-1.0..1.0)).collect();
            let target = (0..24)
                .map(|j| c[j] + (0..FEATURES).map(|i| x[i] * a.data()[i * 24 + j]).sum::<f64>())
                .collect();
            PreparedSample {
                endogenous: Tensor::zeros(&[1, 1, 1]),
                exogenous: Tensor::zeros(&[1, 1, 1]),
                sequence: Tensor::new(&[FEATURES, 1], x).unwrap(),
                target,
            }
        })
        .collect()
}

fn cfg(batch: usize, epochs: usize, patience: usize) -> TrainConfig {
    TrainConfig {
        batch_size: batch,
        max_epochs: epochs,
        patience,
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn linear_model_fits_linear_data() {
    let (tr, va) = (linear_data(1, 96), linear_data(2, 32));
    let model = Linear::new(3);
    let before = mean_loss(&model, &va).unwrap();
    let (best, hist) = train(&model, &tr, &va, &cfg(16, 200, 20)).unwrap();
    let after = mean_loss(&best, &va).unwrap();
    assert!(after <= 1e-3, "validation loss {after}");
    assert!(after < before);
    assert_eq!(Some(after), hist.best_val_loss());
}

#[test]
fn zero_epochs_returns_the_initial_model() {
    let (tr, va) = (linear_data(1, 8), linear_data(2, 4));
    let model = Linear::new(3);
    let (best, hist) = train(&model, &tr, &va, &cfg(4, 0, 3)).unwrap();
    assert_eq!(best.params, model.params);
    assert_eq!(hist, TrainHistory::default());
}

#[test]
fn training_is_deterministic() {
    let (tr, va) = (linear_data(1, 40), linear_data(2, 10));
    let run = || train(&Linear::new(7), &tr, &va, &cfg(8, 5, 5)).unwrap();
    let (a, ha) = run();
    let (b, hb) = run();
    let bits = |m: &Linear| m.params.tensors().iter().flat_map(|t| t.data().iter().map(|v| v.to_bits())).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(ha, hb);
    let (c, _) = train(&Linear::new(7), &tr, &va, &TrainConfig { seed: 6, ..cfg(8, 5, 5) }).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn best_epoch_is_the_validation_minimum() {
    let (tr, va) = (linear_data(3, 50), linear_data(4, 10));
    let (best, hist) = train(&Linear::new(1), &tr, &va, &cfg(7, 30, 4)).unwrap();
    let min = hist.val_loss.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(hist.best_val_loss(), Some(min));
    assert!(min <= *hist.val_loss.last().unwrap());
    assert_eq!(mean_loss(&best, &va).unwrap(), min);
    assert_eq!(hist.train_loss.len(), hist.epochs());
}

#[test]
fn epoch_log_lines() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("train.log");
    let (tr, va) = (linear_data(1, 10), linear_data(2, 4));
    let config = TrainConfig {
        log_path: Some(log.clone()),
        ..cfg(4, 3, 3)
    };
    let (_, hist) = train(&Linear::new(0), &tr, &va, &config).unwrap();
    let text = std::fs::read_to_string(&log).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), hist.epochs());
    for (e, line) in lines.iter().enumerate() {
        let parts: Vec<&str> = line.split(' ').collect();
        assert_eq!(parts[0], format!("epoch={e}"));
        let val: f64 = parts[2].strip_prefix("val_loss=").unwrap().parse().unwrap();
        assert!((val - hist.val_loss[e]).abs() <= 1e-8 * val.abs());
    }
}

#[test]
fn non_finite_loss_is_reported_as_divergence() {
    let (tr, va) = (linear_data(1, 10), linear_data(2, 4));
    let mut model = Linear::new(0);
    model.params.get_mut("b").unwrap().data_mut()[0] = f64::NAN;
    match train(&model, &tr, &va, &cfg(4, 3, 3)) {
        Err(Error::Diverged { epoch: 0, last_finite: None }) => {}
        other => panic!("expected divergence, got {:?}", other.map(|(_, h)| h)),
    }
}

#[test]
fn invalid_training_setups_are_rejected() {
    let (tr, va) = (linear_data(1, 10), linear_data(2, 4));
    let m = Linear::new(0);
    assert!(matches!(train(&m, &[], &va, &cfg(4, 3, 3)), Err(Error::Contract(_))));
    assert!(matches!(train(&m, &tr, &[], &cfg(4, 3, 3)), Err(Error::Contract(_))));
    assert!(matches!(train(&m, &tr, &va, &cfg(0, 3, 3)), Err(Error::Contract(_))));
    assert!(mean_loss(&m, &[]).is_err());
}

// ---------- early stopping ----------

fn hist(val: &[f64]) -> TrainHistory {
    TrainHistory {
        train_loss: val.to_vec(),
        val_loss: val.to_vec(),
        best_epoch: None,
    }
}

#[test]
fn early_stop_examples() {
    assert!(!early_stop_check(&hist(&[]), 2));
    assert!(!early_stop_check(&hist(&[1.0, 0.9, 0.8]), 2));
    assert!(!early_stop_check(&hist(&[1.0, 0.9, 0.95]), 2));
    assert!(early_stop_check(&hist(&[1.0, 0.9, 0.95, 0.97]), 2));
    assert!(early_stop_check(&hist(&[1.0, 1.0]), 1));
    // an improvement below the tolerance does not count
    assert!(early_stop_check(&hist(&[1.0, 1.0 - 1e-12]), 1));
    assert!(!early_stop_check(&hist(&[1.0, 0.5, 0.6, 0.4]), 2));
}

#[test]
fn patience_bounds_the_epoch_count() {
    // with a zero learning rate nothing improves after epoch 0
    let (tr, va) = (linear_data(1, 10), linear_data(2, 4));
    let config = TrainConfig {
        learning_rate: 0.0,
        ..cfg(4, 50, 3)
    };
    let (_, h) = train(&Linear::new(0), &tr, &va, &config).unwrap();
    assert_eq!(h.epochs(), 4);
    assert_eq!(h.best_epoch, Some(0));
}

// ---------- batching ----------

proptest! {
    #[test]
    fn batches_partition_the_samples(n in 1usize..200, bs in 1usize..64, seed in any::<u64>()) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let batches = epoch_batches(n, bs, &mut r);
        prop_assert_eq!(batches.len(), n.div_ceil(bs));
        prop_assert!(batches.iter().all(|b| !b.is_empty() && b.len() <= bs));
        let mut all: Vec<usize> = batches.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }
}

// ---------- grid search ----------

fn space(pairs: &[(&str, &[f64])]) -> BTreeMap<String, Vec<f64>> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect()
}

#[test]
fn grid_enumerates_the_product() {
    let s = space(&[("lr", &[0.1, 0.01]), ("batch", &[16.0, 32.0])]);
    let pts = grid_points(&s).unwrap();
    assert_eq!(pts.len(), 4);
    assert_eq!(pts[0]["batch"], 16.0);
    assert_eq!(pts[0]["lr"], 0.1);
    assert_eq!(pts[1]["lr"], 0.01);
    assert!(grid_points(&BTreeMap::new()).is_err());
    assert!(grid_points(&space(&[("lr", &[])])).is_err());
}

#[test]
fn grid_search_picks_the_argmin() {
    let s = space(&[("a", &[1.0, 2.0, 3.0]), ("b", &[-1.0, 0.5])]);
    let mut calls = 0;
    let (best, results) = grid_search(&s, 9, |p, _| {
        calls += 1;
        Ok((p["a"] - 2.0).powi(2) + (p["b"] - 0.5).powi(2))
    })
    .unwrap();
    assert_eq!(calls, 6);
    assert_eq!(results.len(), 6);
    assert_eq!((best["a"], best["b"]), (2.0, 0.5));
    let seeds: std::collections::BTreeSet<u64> = results.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 6);
    let (_, again) = grid_search(&s, 9, |_, _| Ok(0.0)).unwrap();
    assert_eq!(results.iter().map(|r| r.seed).collect::<Vec<_>>(), again.iter().map(|r| r.seed).collect::<Vec<_>>());
}

#[test]
fn grid_search_ties_nan_and_single_points() {
    let s = space(&[("x", &[1.0, 2.0, 3.0])]);
    let (best, _) = grid_search(&s, 0, |_, _| Ok(1.0)).unwrap();
    assert_eq!(best["x"], 1.0);
    let (best, _) = grid_search(&s, 0, |p, _| Ok(if p["x"] == 1.0 { f64::NAN } else { 2.0 })).unwrap();
    assert_eq!(best["x"], 2.0);
    let (best, res) = grid_search(&space(&[("x", &[4.0])]), 0, |_, _| Ok(0.3)).unwrap();
    assert_eq!((best["x"], res.len()), (4.0, 1));
    let failing = grid_search(&s, 0, |_, _| Err(Error::Contract("boom".into())));
    assert!(failing.is_err());
}

#[test]
fn grid_search_over_real_training() {
    let (tr, va) = (linear_data(1, 32), linear_data(2, 8));
    let s = space(&[("lr", &[0.0, 0.05]), ("batch", &[4.0, 16.0])]);
    let (best, results) = grid_search(&s, 1, |p, seed| {
        let config = TrainConfig {
            learning_rate: p["lr"],
            batch_size: p["batch"] as usize,
            seed,
            ..cfg(1, 10, 10)
        };
        let (m, _) = train(&Linear::new(seed), &tr, &va, &config)?;
        mean_loss(&m, &va)
    })
    .unwrap();
    assert_eq!(results.len(), 4);
    assert_eq!(best["lr"], 0.05);
}
