//! Mini-batch ADAM training with early stopping, and grid search.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::{AdamConfig, AdamState, Tape, Var};
use crate::dataset::PreparedSample;
use crate::models::Forecaster;
use crate::{Error, Result};

/// Improvements smaller than this do not reset the patience counter.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Print one line per epoch to stdout.
    pub verbose: bool,
    /// Also append the epoch lines to this file.
    pub log_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            learning_rate: 0.01,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            verbose: false,
            log_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Index into `val_loss` of the retained parameters.
    pub best_epoch: Option<usize>,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.val_loss.len()
    }

    pub fn best_val_loss(&self) -> Option<f64> {
        self.best_epoch.map(|e| self.val_loss[e])
    }
}

/// True when the last `patience` epochs brought no validation improvement
/// beyond [`IMPROVEMENT_TOLERANCE`] over the best loss seen before them.
pub fn early_stop_check(history: &TrainHistory, patience: usize) -> bool {
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for &loss in &history.val_loss {
        if loss < best - IMPROVEMENT_TOLERANCE {
            best = loss;
            stale = 0;
        } else {
            stale += 1;
        }
    }
    stale >= patience.max(1)
}

fn sample_loss<M: Forecaster>(model: &M, tape: &mut Tape, vars: &[Var], s: &PreparedSample) -> Result<Var> {
    let out = model.forward(tape, vars, s)?;
    let target = tape.constant(&[s.target.len()], s.target.clone())?;
    let out_len = tape.shape(out).iter().product::<usize>();
    let out = tape.reshape(out, &[out_len])?;
    tape.mse_loss(out, target)
}

/// Mean per-sample MSE, without recording gradients.
pub fn mean_loss<M: Forecaster>(model: &M, samples: &[PreparedSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::contract("mean_loss over an empty sample set"));
    }
    let mut total = 0.0;
    for s in samples {
        let pred = model.predict(s)?;
        if pred.len() != s.target.len() {
            return Err(Error::dim(format!("prediction of {} values, target of {}", pred.len(), s.target.len())));
        }
        total += pred.iter().zip(&s.target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64;
    }
    Ok(total / samples.len() as f64)
}

/// Seeded partition of `0..n` into batches of at most `batch_size`; the
/// final partial batch is kept.
pub fn epoch_batches(n: usize, batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

/// Accumulates mean-loss gradients of one batch into the model's `.grad`
/// buffers and returns the batch's summed sample loss.
fn accumulate_batch<M: Forecaster>(model: &mut M, samples: &[&PreparedSample]) -> Result<f64> {
    model.params_mut().zero_grads();
    let weight = 1.0 / samples.len() as f64;
    let mut loss_sum = 0.0;
    for s in samples {
        let mut tape = Tape::new();
        let vars = model.params().register(&mut tape);
        let loss = sample_loss(&*model, &mut tape, &vars, s)?;
        let scaled = tape.scale(loss, weight);
        loss_sum += tape.value(loss)[0];
        tape.backward(scaled)?.write_into(model.params_mut().tensors_mut(), &vars)?;
    }
    Ok(loss_sum)
}

struct Progress {
    verbose: bool,
    log: Option<std::fs::File>,
    path: Option<PathBuf>,
}

impl Progress {
    fn open(config: &TrainConfig) -> Result<Self> {
        let log = match &config.log_path {
            Some(p) => Some(std::fs::File::create(p).map_err(|e| Error::io(p, e))?),
            None => None,
        };
        Ok(Self {
            verbose: config.verbose,
            log,
            path: config.log_path.clone(),
        })
    }

    fn record(&mut self, epoch: usize, train: f64, val: f64) -> Result<()> {
        let line = format!("epoch={epoch} train_loss={train:.9e} val_loss={val:.9e}");
        if self.verbose {
            println!("{line}");
        }
        if let (Some(f), Some(p)) = (self.log.as_mut(), self.path.as_ref()) {
            writeln!(f, "{line}").map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }
}

/// Trains `model` with ADAM on the MSE between its output and each sample's
/// scaled target. Returns the parameters of the epoch with the lowest
/// validation loss.
///
/// Fails with [`Error::Diverged`] as soon as a loss becomes non-finite.
pub fn train<M: Forecaster + Clone>(
    model: &M,
    train_set: &[PreparedSample],
    val_set: &[PreparedSample],
    config: &TrainConfig,
) -> Result<(M, TrainHistory)> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::contract(format!(
            "training needs non-empty train and validation sets (got {} and {})",
            train_set.len(),
            val_set.len()
        )));
    }
    if config.batch_size == 0 || config.patience == 0 {
        return Err(Error::contract("batch_size and patience must be at least 1"));
    }
    let mut history = TrainHistory::default();
    let mut best = model.clone();
    if config.max_epochs == 0 {
        return Ok((best, history));
    }
    let mut progress = Progress::open(config)?;
    let mut current = model.clone();
    let mut adam = AdamState::new(AdamConfig::with_lr(config.learning_rate), current.params().tensors());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best_loss = f64::INFINITY;
    let last_finite = |h: &TrainHistory| h.val_loss.len().checked_sub(1);

    for epoch in 0..config.max_epochs {
        let mut loss_sum = 0.0;
        for batch in epoch_batches(train_set.len(), config.batch_size, &mut rng) {
            let samples: Vec<&PreparedSample> = batch.iter().map(|&i| &train_set[i]).collect();
            let batch_loss = accumulate_batch(&mut current, &samples)?;
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    last_finite: last_finite(&history),
                });
            }
            loss_sum += batch_loss;
            let grads: Vec<Vec<f64>> = current
                .params()
                .tensors()
                .iter()
                .map(|t| t.grad.clone().unwrap_or_else(|| vec![0.0; t.numel()]))
                .collect();
            let refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
            adam.step(current.params_mut().tensors_mut(), &refs)?;
        }
        current.params_mut().zero_grads();
        let train_loss = loss_sum / train_set.len() as f64;
        let val_loss = mean_loss(&current, val_set)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                last_finite: last_finite(&history),
            });
        }
        history.train_loss.push(train_loss);
        history.val_loss.push(val_loss);
        progress.record(epoch, train_loss, val_loss)?;
        if val_loss < best_loss {
            best_loss = val_loss;
            best = current.clone();
            history.best_epoch = Some(epoch);
        }
        if early_stop_check(&history, config.patience) {
            break;
        }
    }
    Ok((best, history))
}

/// One hyperparameter assignment, keyed by name.
pub type GridPoint = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub point: GridPoint,
    pub seed: u64,
    pub val_loss: f64,
}

/// Enumerates the Cartesian product of `space` in lexicographic key order,
/// the last key varying fastest.
pub fn grid_points(space: &BTreeMap<String, Vec<f64>>) -> Result<Vec<GridPoint>> {
    if space.is_empty() || space.values().any(Vec::is_empty) {
        return Err(Error::contract("grid search space must list at least one value per key"));
    }
    let mut points = vec![GridPoint::new()];
    for (key, values) in space {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.insert(key.clone(), v);
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Seed for the `index`-th grid cell.
pub fn derive_seed(base: u64, index: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64 + 1)
}

/// Calls `train_fn(point, seed)` for every point of the grid; `train_fn`
/// returns the final validation loss. The lowest loss wins, ties going to
/// the earliest point.
pub fn grid_search<F>(space: &BTreeMap<String, Vec<f64>>, base_seed: u64, mut train_fn: F) -> Result<(GridPoint, Vec<GridResult>)>
where
    F: FnMut(&GridPoint, u64) -> Result<f64>,
{
    let mut results = Vec::new();
    for (i, point) in grid_points(space)?.into_iter().enumerate() {
        let seed = derive_seed(base_seed, i);
        let val_loss = train_fn(&point, seed)?;
        results.push(GridResult { point, seed, val_loss });
    }
    let key = |r: &GridResult| if r.val_loss.is_nan() { f64::INFINITY } else { r.val_loss };
    let mut best = &results[0];
    for r in &results[1..] {
        if key(r) < key(best) {
            best = r;
        }
    }
    Ok((best.point.clone(), results))
}

