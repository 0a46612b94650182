//! Reverse-mode gradients on a tape and a few ADAM steps fitting a line.

use heatcast::autograd::{dense, AdamConfig, AdamState, Tape, Tensor};

fn main() -> heatcast::Result<()> {
    // d/dx sum(relu(x) * y)
    let mut tape = Tape::new();
    let x = tape.param(&Tensor::new(&[3], vec![-1.0, 0.5, 2.0])?);
    let y = tape.param(&Tensor::new(&[3], vec![4.0, 5.0, 6.0])?);
    let r = tape.relu(x);
    let p = tape.mul(r, y)?;
    let s = tape.sum(p);
    let grads = tape.backward(s)?;
    println!("loss {}  dx {:?}  dy {:?}", tape.value(s)[0], grads.get(x).unwrap(), grads.get(y).unwrap());

    // fit y = 2x − 1 with a 1×1 dense layer
    let xs: Vec<f64> = (0..16).map(|i| i as f64 / 8.0 - 1.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
    let mut params = vec![Tensor::new(&[1, 1], vec![0.0])?.trainable(), Tensor::new(&[1], vec![0.0])?.trainable()];
    let mut adam = AdamState::new(AdamConfig::with_lr(0.1), &params);
    for step in 0..=300 {
        let mut tape = Tape::new();
        let vars: Vec<_> = params.iter().map(|t| tape.param(t)).collect();
        let input = tape.constant(&[16, 1], xs.clone())?;
        let target = tape.constant(&[16, 1], ys.clone())?;
        let pred = dense(&mut tape, input, vars[0], vars[1])?;
        let loss = tape.mse_loss(pred, target)?;
        let grads = tape.backward(loss)?;
        let g: Vec<&[f64]> = vars.iter().map(|&v| grads.get(v).unwrap()).collect();
        adam.step(&mut params, &g)?;
        if step % 100 == 0 {
            println!("step {step:>3}: loss {:.3e}", tape.value(loss)[0]);
        }
    }
    println!("w = {:.4}, b = {:.4}", params[0].data()[0], params[1].data()[0]);
    Ok(())
}
