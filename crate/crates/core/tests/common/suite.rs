//! Gradient-check cases shared by the autograd tests and the acceptance
//! suite.

use heatcast::autograd::{dense, scaled_dot_product_attention, Tape, Tensor, Var};
use heatcast::models::{ConvSpec, LstmConfig, LstmModel, ModelF, ModelFConfig, ModelFPrime, ModelFPrimeConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{away_from_zero, gradcheck_instances, uniform, weighted_sum, Build};

pub struct Case {
    pub name: &'static str,
    pub make: Box<dyn Fn(&mut ChaCha8Rng) -> Vec<Tensor>>,
    pub build: Box<Build<'static>>,
}

impl Case {
    pub fn run(&self, seed: u64) -> f64 {
        gradcheck_instances(seed, &self.make, &*self.build)
    }
}

fn case(
    name: &'static str,
    make: impl Fn(&mut ChaCha8Rng) -> Vec<Tensor> + 'static,
    build: impl Fn(&mut Tape, &[Var]) -> heatcast::Result<Var> + 'static,
) -> Case {
    Case {
        name,
        make: Box::new(make),
        build: Box::new(build),
    }
}

fn u(r: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    uniform(r, shape, -1.0, 1.0)
}

pub fn op_cases() -> Vec<Case> {
    vec![
        case("add", |r| vec![u(r, &[2, 3]), u(r, &[2, 3])], |t, v| {
            let y = t.add(v[0], v[1])?;
            Ok(weighted_sum(t, y))
        }),
        case("sub", |r| vec![u(r, &[2, 3]), u(r, &[2, 3])], |t, v| {
            let y = t.sub(v[0], v[1])?;
            Ok(weighted_sum(t, y))
        }),
        case("mul", |r| vec![u(r, &[2, 3]), u(r, &[2, 3])], |t, v| {
            let y = t.mul(v[0], v[1])?;
            Ok(weighted_sum(t, y))
        }),
        case("scale", |r| vec![u(r, &[4])], |t, v| {
            let y = t.scale(v[0], -1.7);
            Ok(weighted_sum(t, y))
        }),
        case("add_row_bias", |r| vec![u(r, &[3, 4]), u(r, &[4])], |t, v| {
            let y = t.add_row_bias(v[0], v[1])?;
            Ok(weighted_sum(t, y))
        }),
        case("matmul", |r| vec![u(r, &[3, 4]), u(r, &[4, 2])], |t, v| {
            let y = t.matmul(v[0], v[1])?;
            Ok(weighted_sum(t, y))
        }),
        case("transpose", |r| vec![u(r, &[3, 4])], |t, v| {
            let y = t.transpose(v[0])?;
            Ok(weighted_sum(t, y))
        }),
        case("reshape", |r| vec![u(r, &[2, 6])], |t, v| {
            let y = t.reshape(v[0], &[3, 4])?;
            Ok(weighted_sum(t, y))
        }),
        case("relu", |r| vec![away_from_zero(r, &[3, 4])], |t, v| {
            let y = t.relu(v[0]);
            Ok(weighted_sum(t, y))
        }),
        case("sigmoid", |r| vec![uniform(r, &[3, 4], -3.0, 3.0)], |t, v| {
            let y = t.sigmoid(v[0]);
            Ok(weighted_sum(t, y))
        }),
        case("tanh", |r| vec![uniform(r, &[3, 4], -3.0, 3.0)], |t, v| {
            let y = t.tanh(v[0]);
            Ok(weighted_sum(t, y))
        }),
        case("softmax_rows", |r| vec![uniform(r, &[3, 4], -2.0, 2.0)], |t, v| {
            let y = t.softmax(v[0], 1)?;
            Ok(weighted_sum(t, y))
        }),
        case("softmax_cols", |r| vec![uniform(r, &[3, 4], -2.0, 2.0)], |t, v| {
            let y = t.softmax(v[0], 0)?;
            Ok(weighted_sum(t, y))
        }),
        case("sum", |r| vec![u(r, &[2, 5])], |t, v| Ok(t.sum(v[0]))),
        case("mse_loss", |r| vec![u(r, &[2, 3]), u(r, &[2, 3])], |t, v| t.mse_loss(v[0], v[1])),
        case(
            "conv2d_stride1",
            |r| vec![u(r, &[2, 5, 5]), u(r, &[3, 2, 3, 3]), u(r, &[3])],
            |t, v| {
                let y = t.conv2d(v[0], v[1], v[2], 1, 0)?;
                Ok(weighted_sum(t, y))
            },
        ),
        case(
            "conv2d_stride2_pad1",
            |r| vec![u(r, &[2, 5, 6]), u(r, &[2, 2, 3, 2]), u(r, &[2])],
            |t, v| {
                let y = t.conv2d(v[0], v[1], v[2], 2, 1)?;
                Ok(weighted_sum(t, y))
            },
        ),
        case("slice_cols", |r| vec![u(r, &[3, 5])], |t, v| {
            let y = t.slice_cols(v[0], 1, 3)?;
            Ok(weighted_sum(t, y))
        }),
        case("concat_cols", |r| vec![u(r, &[3, 2]), u(r, &[3, 3])], |t, v| {
            let y = t.concat_cols(&[v[0], v[1]])?;
            Ok(weighted_sum(t, y))
        }),
        case("dense", |r| vec![u(r, &[2, 4]), u(r, &[4, 3]), u(r, &[3])], |t, v| {
            let y = dense(t, v[0], v[1], v[2])?;
            Ok(weighted_sum(t, y))
        }),
        case(
            "attention",
            |r| vec![u(r, &[2, 3]), u(r, &[2, 3]), u(r, &[2, 2])],
            |t, v| {
                let y = scaled_dot_product_attention(t, v[0], v[1], v[2])?;
                Ok(t.sum(y))
            },
        ),
        case("shared_input", |r| vec![u(r, &[2, 3])], |t, v| {
            let sq = t.mul(v[0], v[0])?;
            let y = t.add(sq, v[0])?;
            Ok(weighted_sum(t, y))
        }),
        case(
            "conv_relu_dense_mse",
            |r| {
                vec![
                    u(r, &[2, 4, 4]),
                    u(r, &[2, 2, 3, 3]),
                    u(r, &[2]),
                    u(r, &[8, 3]),
                    u(r, &[3]),
                    u(r, &[1, 3]),
                ]
            },
            |t, v| {
                let c = t.conv2d(v[0], v[1], v[2], 1, 0)?;
                let c = t.relu(c);
                let flat = t.reshape(c, &[1, 8])?;
                let y = dense(t, flat, v[3], v[4])?;
                t.mse_loss(y, v[5])
            },
        ),
    ]
}

pub fn tiny_lstm() -> LstmConfig {
    LstmConfig {
        layers: 2,
        hidden: 4,
        input_dim: 2,
        horizon: 24,
    }
}

pub fn tiny_f() -> ModelFConfig {
    ModelFConfig {
        in_channels: 3,
        height: 4,
        width: 4,
        convs: vec![ConvSpec::same(2, 3)],
        dense: vec![5],
        horizon: 24,
    }
}

pub fn tiny_fprime() -> ModelFPrimeConfig {
    ModelFPrimeConfig {
        endo_channels: 2,
        exo_channels: 2,
        height: 4,
        width: 4,
        endo_conv: ConvSpec::same(2, 3),
        exo_conv: ConvSpec::same(2, 3),
        attn_dim: 3,
        heads: 1,
        residual: false,
        dense: vec![4],
        horizon: 24,
    }
}

fn target(t: &mut Tape) -> Var {
    t.constant(&[24], (0..24).map(|i| 0.05 * i as f64 - 0.4).collect()).unwrap()
}

/// Parameters from the model's own initialiser (seeded per instance),
/// followed by the random input tensors.
fn with_inputs(params: Vec<Tensor>, r: &mut ChaCha8Rng, inputs: &[&[usize]]) -> Vec<Tensor> {
    let mut all = params;
    all.extend(inputs.iter().map(|s| u(r, s)));
    all
}

pub fn model_cases() -> Vec<Case> {
    let lstm = LstmModel::new(tiny_lstm(), 0);
    let f = ModelF::new(tiny_f(), 0).unwrap();
    let fp = ModelFPrime::new(tiny_fprime(), 0).unwrap();
    let fp_heads = ModelFPrime::new(
        ModelFPrimeConfig {
            attn_dim: 4,
            heads: 2,
            residual: true,
            ..tiny_fprime()
        },
        0,
    )
    .unwrap();
    vec![
        case(
            "lstm",
            |r| with_inputs(LstmModel::new(tiny_lstm(), r.gen()).params.tensors().to_vec(), r, &[&[3, 2]]),
            move |t, v| {
                let (params, input) = v.split_at(v.len() - 1);
                let y = lstm.forward_sequence(t, params, input[0])?;
                let target = target(t);
                t.mse_loss(y, target)
            },
        ),
        case(
            "model_f",
            |r| with_inputs(ModelF::new(tiny_f(), r.gen()).unwrap().params.tensors().to_vec(), r, &[&[3, 4, 4]]),
            move |t, v| {
                let (params, input) = v.split_at(v.len() - 1);
                let y = f.forward_stack(t, params, input[0])?;
                let target = target(t);
                t.mse_loss(y, target)
            },
        ),
        case(
            "model_fprime",
            |r| {
                let p = ModelFPrime::new(tiny_fprime(), r.gen()).unwrap().params.tensors().to_vec();
                with_inputs(p, r, &[&[2, 4, 4], &[2, 4, 4]])
            },
            move |t, v| {
                let (params, input) = v.split_at(v.len() - 2);
                let y = fp.forward_branches(t, params, input[0], input[1])?;
                let target = target(t);
                t.mse_loss(y, target)
            },
        ),
        case(
            "model_fprime_two_heads_residual",
            |r| {
                let cfg = ModelFPrimeConfig {
                    attn_dim: 4,
                    heads: 2,
                    residual: true,
                    ..tiny_fprime()
                };
                let p = ModelFPrime::new(cfg, r.gen()).unwrap().params.tensors().to_vec();
                with_inputs(p, r, &[&[2, 4, 4], &[2, 4, 4]])
            },
            move |t, v| {
                let (params, input) = v.split_at(v.len() - 2);
                let y = fp_heads.forward_branches(t, params, input[0], input[1])?;
                let target = target(t);
                t.mse_loss(y, target)
            },
        ),
    ]
}
