//! Forecasting architectures and checkpoint persistence.
//!
//! - [`LstmModel`]: stacked LSTM over per-hour feature vectors.
//! - [`ModelF`]: one convolutional stack over all scalogram channels.
//! - [`ModelFPrime`]: separate endogenous/exogenous convolution branches
//!   merged by cross-attention.
//!
//! Every model maps one [`PreparedSample`] to a 24-hour forecast and shares
//! the [`Forecaster`] interface used by training and evaluation.

mod checkpoint;
mod cnn;
mod fprime;
mod lstm;
mod params;

use serde::{Deserialize, Serialize};

pub use checkpoint::{
    count_parameters, load_checkpoint, save_checkpoint, ModelCheckpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use cnn::{concat_channels, ConvSpec, ModelF, ModelFConfig};
pub use fprime::{ModelFPrime, ModelFPrimeConfig};
pub use lstm::{LstmConfig, LstmModel};
pub use params::{layout_size, Init, ParamSet, ParamSpec};

use crate::autograd::{Tape, Var};
use crate::dataset::PreparedSample;
use crate::{Error, Result};

/// Anything with named parameters and a differentiable forward pass.
pub trait Forecaster {
    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;

    /// Records the forward pass on `tape`. `vars` are the parameters as
    /// registered by [`ParamSet::register`].
    fn forward(&self, tape: &mut Tape, vars: &[Var], input: &PreparedSample) -> Result<Var>;

    fn predict(&self, input: &PreparedSample) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let vars = self.params().register(&mut tape);
        let out = self.forward(&mut tape, &vars, input)?;
        Ok(tape.value(out).to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    Lstm,
    F,
    FPrime,
}

impl ModelKind {
    pub fn tag(self) -> u8 {
        match self {
            ModelKind::Lstm => 0,
            ModelKind::F => 1,
            ModelKind::FPrime => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(ModelKind::Lstm),
            1 => Some(ModelKind::F),
            2 => Some(ModelKind::FPrime),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::F => "f",
            ModelKind::FPrime => "fprime",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lstm" => Ok(ModelKind::Lstm),
            "f" => Ok(ModelKind::F),
            "fprime" => Ok(ModelKind::FPrime),
            other => Err(Error::contract(format!("unknown model kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the three architectures.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Lstm(LstmModel),
    F(ModelF),
    FPrime(ModelFPrime),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Lstm(_) => ModelKind::Lstm,
            Model::F(_) => ModelKind::F,
            Model::FPrime(_) => ModelKind::FPrime,
        }
    }

    pub fn config_json(&self) -> serde_json::Value {
        match self {
            Model::Lstm(m) => serde_json::to_value(&m.config),
            Model::F(m) => serde_json::to_value(&m.config),
            Model::FPrime(m) => serde_json::to_value(&m.config),
        }
        .expect("configs serialise")
    }

    /// Rebuilds a model from a config echo and stored parameters.
    pub fn from_parts(kind: ModelKind, config: serde_json::Value, params: ParamSet) -> Result<Self> {
        let bad = |e: serde_json::Error| Error::format(None, format!("invalid {kind} config: {e}"));
        let model = match kind {
            ModelKind::Lstm => {
                let config: LstmConfig = serde_json::from_value(config).map_err(bad)?;
                params.check_layout(&config.param_specs())?;
                Model::Lstm(LstmModel { config, params })
            }
            ModelKind::F => {
                let config: ModelFConfig = serde_json::from_value(config).map_err(bad)?;
                params.check_layout(&config.param_specs()?)?;
                Model::F(ModelF { config, params })
            }
            ModelKind::FPrime => {
                let config: ModelFPrimeConfig = serde_json::from_value(config).map_err(bad)?;
                params.check_layout(&config.param_specs()?)?;
                Model::FPrime(ModelFPrime { config, params })
            }
        };
        Ok(model)
    }

    fn inner(&self) -> &dyn Forecaster {
        match self {
            Model::Lstm(m) => m,
            Model::F(m) => m,
            Model::FPrime(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Forecaster {
        match self {
            Model::Lstm(m) => m,
            Model::F(m) => m,
            Model::FPrime(m) => m,
        }
    }
}

impl Forecaster for Model {
    fn params(&self) -> &ParamSet {
        self.inner().params()
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        self.inner_mut().params_mut()
    }

    fn forward(&self, tape: &mut Tape, vars: &[Var], input: &PreparedSample) -> Result<Var> {
        self.inner().forward(tape, vars, input)
    }
}

/// Published-scale reconstructions of the three architectures.
///
/// These are sized for parameter accounting; [`desk_configs`] gives the
/// variants that train in minutes.
pub fn default_configs() -> (LstmConfig, ModelFConfig, ModelFPrimeConfig) {
    (LstmConfig::default(), ModelFConfig::default(), ModelFPrimeConfig::default())
}

pub fn desk_configs() -> (LstmConfig, ModelFConfig, ModelFPrimeConfig) {
    (LstmConfig::default(), ModelFConfig::desk(), ModelFPrimeConfig::desk())
}
