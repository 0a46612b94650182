use serde::{Deserialize, Serialize};

use super::cnn::{dense_specs, dense_stack, ConvSpec};
use super::params::{layout_size, ParamSpec, VarCursor};
use super::{Forecaster, ParamSet};
use crate::autograd::{dense, scaled_dot_product_attention, Tape, Var};
use crate::dataset::PreparedSample;
use crate::{Error, Result};

/// Dual-branch network with cross-attention.
///
/// Each branch applies one ReLU convolution to its scalogram stack. The
/// `C×H'×W'` feature map becomes `W'` tokens of width `C·H'` (one per time
/// column), a learnable positional table is added, and the endogenous
/// tokens attend over the exogenous ones. The attended context is
/// flattened into a dense head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFPrimeConfig {
    pub endo_channels: usize,
    pub exo_channels: usize,
    pub height: usize,
    pub width: usize,
    pub endo_conv: ConvSpec,
    pub exo_conv: ConvSpec,
    /// Query/key/value width.
    pub attn_dim: usize,
    pub heads: usize,
    /// Add the projected queries back onto the attention output.
    pub residual: bool,
    pub dense: Vec<usize>,
    pub horizon: usize,
}

impl Default for ModelFPrimeConfig {
    /// Published-scale reconstruction, about 5.6M parameters.
    fn default() -> Self {
        Self {
            endo_channels: 5,
            exo_channels: 8,
            height: 24,
            width: 24,
            endo_conv: ConvSpec::same(64, 3),
            exo_conv: ConvSpec::same(64, 3),
            attn_dim: 512,
            heads: 1,
            residual: false,
            dense: vec![256],
            horizon: 24,
        }
    }
}

struct Branch {
    tokens: usize,
    width: usize,
}

impl ModelFPrimeConfig {
    /// Laptop-sized variant used for training runs.
    pub fn desk() -> Self {
        Self {
            endo_conv: ConvSpec::same(8, 3),
            exo_conv: ConvSpec::same(8, 3),
            attn_dim: 16,
            dense: vec![64],
            ..Self::default()
        }
    }

    fn branch(&self, conv: &ConvSpec) -> Result<Branch> {
        let h = conv.output_extent(self.height)?;
        let w = conv.output_extent(self.width)?;
        Ok(Branch {
            tokens: w,
            width: conv.out_channels * h,
        })
    }

    pub fn param_specs(&self) -> Result<Vec<ParamSpec>> {
        if self.heads == 0 || self.attn_dim % self.heads != 0 {
            return Err(Error::dim(format!(
                "attn_dim {} is not divisible into {} heads",
                self.attn_dim, self.heads
            )));
        }
        let endo = self.branch(&self.endo_conv)?;
        let exo = self.branch(&self.exo_conv)?;
        let d = self.attn_dim;
        let mut specs = Vec::new();
        specs.extend(self.endo_conv.specs("endo.conv", self.endo_channels));
        specs.extend(self.exo_conv.specs("exo.conv", self.exo_channels));
        specs.push(ParamSpec::glorot("endo.pos", &[endo.tokens, endo.width], endo.tokens, endo.width));
        specs.push(ParamSpec::glorot("exo.pos", &[exo.tokens, exo.width], exo.tokens, exo.width));
        specs.extend(dense_specs("attn.query", endo.width, d));
        specs.extend(dense_specs("attn.key", exo.width, d));
        specs.extend(dense_specs("attn.value", exo.width, d));
        let mut width = endo.tokens * d;
        for (i, &n) in self.dense.iter().enumerate() {
            specs.extend(dense_specs(&format!("dense{i}"), width, n));
            width = n;
        }
        specs.extend(dense_specs("head", width, self.horizon));
        Ok(specs)
    }

    pub fn parameter_count(&self) -> Result<usize> {
        Ok(layout_size(&self.param_specs()?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFPrime {
    pub config: ModelFPrimeConfig,
    pub params: ParamSet,
}

fn tokens(tape: &mut Tape, stack: Var, kernel: Var, bias: Var, conv: &ConvSpec) -> Result<Var> {
    let y = tape.conv2d(stack, kernel, bias, conv.stride, conv.padding)?;
    let y = tape.relu(y);
    let (c, h, w) = match *tape.shape(y) {
        [c, h, w] => (c, h, w),
        _ => unreachable!("conv2d output is rank 3"),
    };
    let cols = tape.reshape(y, &[c * h, w])?;
    tape.transpose(cols)
}

impl ModelFPrime {
    pub fn new(config: ModelFPrimeConfig, seed: u64) -> Result<Self> {
        let params = ParamSet::init(&config.param_specs()?, seed);
        Ok(Self { config, params })
    }

    pub fn forward_branches(&self, tape: &mut Tape, vars: &[Var], endo: Var, exo: Var) -> Result<Var> {
        let cfg = &self.config;
        for (name, v, c) in [("endogenous", endo, cfg.endo_channels), ("exogenous", exo, cfg.exo_channels)] {
            if tape.shape(v) != [c, cfg.height, cfg.width] {
                return Err(Error::dim(format!(
                    "model F': {name} branch {:?}, config expects [{c}, {}, {}]",
                    tape.shape(v),
                    cfg.height,
                    cfg.width
                )));
            }
        }
        let mut cur = VarCursor::new(vars);
        let (ek, eb, xk, xb) = (cur.take()?, cur.take()?, cur.take()?, cur.take()?);
        let (endo_pos, exo_pos) = (cur.take()?, cur.take()?);
        let (wq, bq, wk, bk, wv, bv) = (
            cur.take()?,
            cur.take()?,
            cur.take()?,
            cur.take()?,
            cur.take()?,
            cur.take()?,
        );

        let endo_tokens = tokens(tape, endo, ek, eb, &cfg.endo_conv)?;
        let endo_tokens = tape.add(endo_tokens, endo_pos)?;
        let exo_tokens = tokens(tape, exo, xk, xb, &cfg.exo_conv)?;
        let exo_tokens = tape.add(exo_tokens, exo_pos)?;

        let q = dense(tape, endo_tokens, wq, bq)?;
        let k = dense(tape, exo_tokens, wk, bk)?;
        let v = dense(tape, exo_tokens, wv, bv)?;
        let context = if cfg.heads == 1 {
            scaled_dot_product_attention(tape, q, k, v)?
        } else {
            let width = cfg.attn_dim / cfg.heads;
            let mut parts = Vec::with_capacity(cfg.heads);
            for head in 0..cfg.heads {
                let qh = tape.slice_cols(q, head * width, width)?;
                let kh = tape.slice_cols(k, head * width, width)?;
                let vh = tape.slice_cols(v, head * width, width)?;
                parts.push(scaled_dot_product_attention(tape, qh, kh, vh)?);
            }
            tape.concat_cols(&parts)?
        };
        let context = if cfg.residual { tape.add(context, q)? } else { context };

        let flat_len = tape.value(context).len();
        let flat = tape.reshape(context, &[1, flat_len])?;
        let out = dense_stack(tape, &mut cur, flat, cfg.dense.len())?;
        tape.reshape(out, &[cfg.horizon])
    }
}

impl Forecaster for ModelFPrime {
    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn forward(&self, tape: &mut Tape, vars: &[Var], input: &PreparedSample) -> Result<Var> {
        let endo = tape.leaf(&input.endogenous);
        let exo = tape.leaf(&input.exogenous);
        self.forward_branches(tape, vars, endo, exo)
    }
}
