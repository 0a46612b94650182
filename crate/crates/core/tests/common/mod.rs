#![allow(dead_code)]

use heatcast::autograd::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;
/// Instances whose ReLU inputs come closer than this to 0 are resampled.
pub const KINK_MARGIN: f64 = 1e-3;
pub const INSTANCES: usize = 20;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Uniform values in `±[KINK_MARGIN·10, 1]`.
pub fn away_from_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.gen_range(10.0 * KINK_MARGIN..1.0);
            if rng.gen_bool(0.5) { m } else { -m }
        })
        .collect();
    Tensor::new(shape, data).unwrap()
}

/// Reduces any output to a scalar through fixed pseudo-random weights, so
/// every output element contributes a distinct amount.
pub fn weighted_sum(tape: &mut Tape, out: Var) -> Var {
    let shape = tape.shape(out).to_vec();
    let n: usize = shape.iter().product();
    let w: Vec<f64> = (0..n).map(|i| 0.5 + ((i * 7919) % 13) as f64 / 13.0).collect();
    let w = tape.constant(&shape, w).unwrap();
    let prod = tape.mul(out, w).unwrap();
    tape.sum(prod)
}

pub type Build<'a> = dyn Fn(&mut Tape, &[Var]) -> heatcast::Result<Var> + 'a;

fn eval(inputs: &[Tensor], build: &Build) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t)).collect();
    let loss = build(&mut tape, &vars).unwrap();
    tape.value(loss)[0]
}

/// Gradients with a smaller norm than this are compared absolutely.
/// Central differences at `FD_STEP` resolve derivatives only to about
/// 1e-11, and some gradients are exactly zero (a key bias shifts every
/// attention score in a row equally, which softmax cancels).
pub const NORM_FLOOR: f64 = 1e-6;

/// Norm-wise relative error `‖a − n‖ / max(‖a‖, ‖n‖, NORM_FLOOR)`.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(&mut analytic.iter().copied()).max(norm(&mut numeric.iter().copied())).max(NORM_FLOOR);
    diff / scale
}

/// Compares tape gradients of the scalar built by `build` with central
/// differences for every input element. Returns the worst per-input
/// relative error, or `None` when a ReLU input lies within
/// [`KINK_MARGIN`] of its kink.
pub fn gradcheck(inputs: &[Tensor], build: &Build) -> Option<f64> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t)).collect();
    let loss = build(&mut tape, &vars).unwrap();
    assert_eq!(tape.shape(loss), [1], "gradcheck needs a scalar");
    if tape.min_abs_relu_input().is_some_and(|m| m < KINK_MARGIN) {
        return None;
    }
    let grads = tape.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (i, var) in vars.iter().enumerate() {
        let analytic = grads
            .get(*var)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; inputs[i].numel()]);
        let mut numeric = vec![0.0; inputs[i].numel()];
        for k in 0..inputs[i].numel() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[k] += FD_STEP;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[k] -= FD_STEP;
            numeric[k] = (eval(&plus, build) - eval(&minus, build)) / (2.0 * FD_STEP);
        }
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    Some(worst)
}

/// Runs [`gradcheck`] on `INSTANCES` accepted random instances and returns
/// the worst error seen.
pub fn gradcheck_instances(
    base_seed: u64,
    make: impl Fn(&mut ChaCha8Rng) -> Vec<Tensor>,
    build: &Build,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    for attempt in 0..INSTANCES * 20 {
        if accepted == INSTANCES {
            break;
        }
        let mut r = rng(base_seed.wrapping_mul(1000).wrapping_add(attempt as u64));
        let inputs = make(&mut r);
        if let Some(err) = gradcheck(&inputs, build) {
            worst = worst.max(err);
            accepted += 1;
        }
    }
    assert_eq!(accepted, INSTANCES, "too many instances rejected near ReLU kinks");
    worst
}

pub mod suite;
pub mod oracles;
