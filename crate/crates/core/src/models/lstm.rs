use serde::{Deserialize, Serialize};

use super::params::{layout_size, ParamSpec, VarCursor};
use super::{Forecaster, ParamSet};
use crate::autograd::{dense, Tape, Var};
use crate::dataset::PreparedSample;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub layers: usize,
    pub hidden: usize,
    pub input_dim: usize,
    pub horizon: usize,
}

impl Default for LstmConfig {
    /// Four layers of 32 units over the 13 per-hour feature channels.
    fn default() -> Self {
        Self {
            layers: 4,
            hidden: 32,
            input_dim: 13,
            horizon: 24,
        }
    }
}

impl LstmConfig {
    /// Per layer: input weights `in×4H`, recurrent weights `H×4H` and one
    /// bias `4H`, gates ordered input, forget, cell, output. A linear head
    /// maps the last hidden state to the horizon.
    pub fn param_specs(&self) -> Vec<ParamSpec> {
        let h = self.hidden;
        let mut specs = Vec::new();
        for l in 0..self.layers {
            let input = if l == 0 { self.input_dim } else { h };
            specs.push(ParamSpec::glorot(format!("lstm{l}.w_ih"), &[input, 4 * h], input, 4 * h));
            specs.push(ParamSpec::glorot(format!("lstm{l}.w_hh"), &[h, 4 * h], h, 4 * h));
            specs.push(ParamSpec::zeros(format!("lstm{l}.bias"), &[4 * h]));
        }
        specs.push(ParamSpec::glorot("head.weight", &[h, self.horizon], h, self.horizon));
        specs.push(ParamSpec::zeros("head.bias", &[self.horizon]));
        specs
    }

    pub fn parameter_count(&self) -> usize {
        layout_size(&self.param_specs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub config: LstmConfig,
    pub params: ParamSet,
}

impl LstmModel {
    pub fn new(config: LstmConfig, seed: u64) -> Self {
        let params = ParamSet::init(&config.param_specs(), seed);
        Self { config, params }
    }

    /// Stacked LSTM over the rows of `sequence` (`T×input_dim`).
    pub fn forward_sequence(&self, tape: &mut Tape, vars: &[Var], sequence: Var) -> Result<Var> {
        let cfg = &self.config;
        let shape = tape.shape(sequence).to_vec();
        let [steps, dim] = shape[..] else {
            return Err(Error::dim(format!("lstm: input must be T×features, got {shape:?}")));
        };
        if dim != cfg.input_dim || steps == 0 {
            return Err(Error::dim(format!(
                "lstm: input is {steps}×{dim}, config expects T×{}",
                cfg.input_dim
            )));
        }
        let h = cfg.hidden;
        let mut cursor = VarCursor::new(vars);
        let columns = tape.transpose(sequence)?;
        let mut inputs: Vec<Var> = (0..steps)
            .map(|t| {
                let col = tape.slice_cols(columns, t, 1)?;
                tape.reshape(col, &[1, dim])
            })
            .collect::<Result<_>>()?;
        for _ in 0..cfg.layers {
            let (w_ih, w_hh, bias) = (cursor.take()?, cursor.take()?, cursor.take()?);
            let mut hidden = tape.constant(&[1, h], vec![0.0; h])?;
            let mut cell = tape.constant(&[1, h], vec![0.0; h])?;
            let mut outputs = Vec::with_capacity(steps);
            for &x in &inputs {
                let zx = dense(tape, x, w_ih, bias)?;
                let zh = tape.matmul(hidden, w_hh)?;
                let z = tape.add(zx, zh)?;
                let i_gate = tape.slice_cols(z, 0, h)?;
                let f_gate = tape.slice_cols(z, h, h)?;
                let g_gate = tape.slice_cols(z, 2 * h, h)?;
                let o_gate = tape.slice_cols(z, 3 * h, h)?;
                let i_gate = tape.sigmoid(i_gate);
                let f_gate = tape.sigmoid(f_gate);
                let g_gate = tape.tanh(g_gate);
                let o_gate = tape.sigmoid(o_gate);
                let keep = tape.mul(f_gate, cell)?;
                let write = tape.mul(i_gate, g_gate)?;
                cell = tape.add(keep, write)?;
                let squashed = tape.tanh(cell);
                hidden = tape.mul(o_gate, squashed)?;
                outputs.push(hidden);
            }
            inputs = outputs;
        }
        let (w, b) = (cursor.take()?, cursor.take()?);
        let last = *inputs.last().expect("steps > 0");
        let out = dense(tape, last, w, b)?;
        tape.reshape(out, &[cfg.horizon])
    }
}

impl Forecaster for LstmModel {
    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn forward(&self, tape: &mut Tape, vars: &[Var], input: &PreparedSample) -> Result<Var> {
        let seq = tape.leaf(&input.sequence);
        self.forward_sequence(tape, vars, seq)
    }
}
