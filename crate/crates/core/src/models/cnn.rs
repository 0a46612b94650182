use serde::{Deserialize, Serialize};

use super::params::{layout_size, ParamSpec, VarCursor};
use super::{Forecaster, ParamSet};
use crate::autograd::{dense, Tape, Tensor, Var};
use crate::dataset::PreparedSample;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvSpec {
    /// Stride-1 convolution that keeps the spatial extent for odd kernels.
    pub fn same(out_channels: usize, kernel: usize) -> Self {
        Self {
            out_channels,
            kernel,
            stride: 1,
            padding: kernel / 2,
        }
    }

    pub fn output_extent(&self, extent: usize) -> Result<usize> {
        let padded = extent + 2 * self.padding;
        if self.kernel == 0 || self.stride == 0 || self.kernel > padded {
            return Err(Error::dim(format!(
                "conv: kernel {} does not fit padded extent {padded}",
                self.kernel
            )));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }

    pub(crate) fn specs(&self, prefix: &str, in_channels: usize) -> [ParamSpec; 2] {
        let k = self.kernel;
        [
            ParamSpec::glorot(
                format!("{prefix}.kernel"),
                &[self.out_channels, in_channels, k, k],
                in_channels * k * k,
                self.out_channels * k * k,
            ),
            ParamSpec::zeros(format!("{prefix}.bias"), &[self.out_channels]),
        ]
    }
}

pub(crate) fn dense_specs(prefix: &str, input: usize, output: usize) -> [ParamSpec; 2] {
    [
        ParamSpec::glorot(format!("{prefix}.weight"), &[input, output], input, output),
        ParamSpec::zeros(format!("{prefix}.bias"), &[output]),
    ]
}

/// Hidden dense layers with ReLU followed by the linear head. `x` is `1×n`.
pub(crate) fn dense_stack(tape: &mut Tape, cursor: &mut VarCursor, mut x: Var, hidden: usize) -> Result<Var> {
    for _ in 0..hidden {
        let (w, b) = (cursor.take()?, cursor.take()?);
        let y = dense(tape, x, w, b)?;
        x = tape.relu(y);
    }
    let (w, b) = (cursor.take()?, cursor.take()?);
    dense(tape, x, w, b)
}

/// Single-stack scalogram CNN: every channel is concatenated into one
/// input, passed through ReLU convolutions, flattened and fed to dense
/// layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFConfig {
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub convs: Vec<ConvSpec>,
    pub dense: Vec<usize>,
    pub horizon: usize,
}

impl Default for ModelFConfig {
    /// Reconstruction at the published scale: two 3×3 convolutions (32 and
    /// 64 maps) over the 13-channel 24×24 stack, then 4206 and 64 wide
    /// dense layers. 155,347,270 parameters, 99.8% of them in the first
    /// dense layer.
    fn default() -> Self {
        Self {
            in_channels: 13,
            height: 24,
            width: 24,
            convs: vec![ConvSpec::same(32, 3), ConvSpec::same(64, 3)],
            dense: vec![4206, 64],
            horizon: 24,
        }
    }
}

impl ModelFConfig {
    /// Laptop-sized variant used for training runs.
    pub fn desk() -> Self {
        Self {
            convs: vec![ConvSpec::same(8, 3), ConvSpec::same(8, 3)],
            dense: vec![32],
            ..Self::default()
        }
    }

    /// `(channels, height, width)` after the convolution block.
    pub fn conv_output(&self) -> Result<(usize, usize, usize)> {
        let (mut c, mut h, mut w) = (self.in_channels, self.height, self.width);
        for conv in &self.convs {
            h = conv.output_extent(h)?;
            w = conv.output_extent(w)?;
            c = conv.out_channels;
        }
        Ok((c, h, w))
    }

    pub fn param_specs(&self) -> Result<Vec<ParamSpec>> {
        let mut specs = Vec::new();
        let mut c = self.in_channels;
        for (i, conv) in self.convs.iter().enumerate() {
            specs.extend(conv.specs(&format!("conv{i}"), c));
            c = conv.out_channels;
        }
        let (c, h, w) = self.conv_output()?;
        let mut width = c * h * w;
        for (i, &d) in self.dense.iter().enumerate() {
            specs.extend(dense_specs(&format!("dense{i}"), width, d));
            width = d;
        }
        specs.extend(dense_specs("head", width, self.horizon));
        Ok(specs)
    }

    pub fn parameter_count(&self) -> Result<usize> {
        Ok(layout_size(&self.param_specs()?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelF {
    pub config: ModelFConfig,
    pub params: ParamSet,
}

impl ModelF {
    pub fn new(config: ModelFConfig, seed: u64) -> Result<Self> {
        let params = ParamSet::init(&config.param_specs()?, seed);
        Ok(Self { config, params })
    }

    /// Forward pass over a `C×H×W` stack already on the tape.
    pub fn forward_stack(&self, tape: &mut Tape, vars: &[Var], stack: Var) -> Result<Var> {
        let cfg = &self.config;
        if tape.shape(stack) != [cfg.in_channels, cfg.height, cfg.width] {
            return Err(Error::dim(format!(
                "model F: input {:?}, config expects [{}, {}, {}]",
                tape.shape(stack),
                cfg.in_channels,
                cfg.height,
                cfg.width
            )));
        }
        let mut cursor = VarCursor::new(vars);
        let mut x = stack;
        for conv in &cfg.convs {
            let (k, b) = (cursor.take()?, cursor.take()?);
            let y = tape.conv2d(x, k, b, conv.stride, conv.padding)?;
            x = tape.relu(y);
        }
        let flat_len = tape.value(x).len();
        let flat = tape.reshape(x, &[1, flat_len])?;
        let out = dense_stack(tape, &mut cursor, flat, cfg.dense.len())?;
        tape.reshape(out, &[cfg.horizon])
    }
}

/// Stacks endogenous and exogenous channels into one `C×H×W` tensor.
pub fn concat_channels(endogenous: &Tensor, exogenous: &Tensor) -> Result<Tensor> {
    let (e, x) = (endogenous.shape(), exogenous.shape());
    if e.len() != 3 || x.len() != 3 || e[1..] != x[1..] {
        return Err(Error::dim(format!("cannot stack channels of shapes {e:?} and {x:?}")));
    }
    let mut data = endogenous.data().to_vec();
    data.extend_from_slice(exogenous.data());
    Tensor::new(&[e[0] + x[0], e[1], e[2]], data)
}

impl Forecaster for ModelF {
    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn forward(&self, tape: &mut Tape, vars: &[Var], input: &PreparedSample) -> Result<Var> {
        let stack = concat_channels(&input.endogenous, &input.exogenous)?;
        let stack = tape.leaf(&stack);
        self.forward_stack(tape, vars, stack)
    }
}
