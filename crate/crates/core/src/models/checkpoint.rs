//! Binary checkpoint format, little-endian throughout:
//!
//! ```text
//! magic      8 bytes  "HCASTCKP"
//! version    u32
//! kind       u8       0 = lstm, 1 = f, 2 = fprime
//! config     u32 length + UTF-8 JSON {"model": .., "scaler": .. | null}
//! arrays     u32 count, then per array:
//!              u32 name length + UTF-8 name
//!              u32 rank + rank × u64 extents
//!              numel × f64
//! ```
//!
//! Arrays named `scaler.*` hold feature scaling statistics; all others are
//! trainable parameters in model order.

use std::path::Path;

use serde_json::json;

use super::{Model, ModelKind, ParamSet};
use crate::autograd::Tensor;
use crate::dataset::{ChannelLayout, FeatureScaler};
use crate::models::Forecaster;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"HCASTCKP";
pub const CHECKPOINT_VERSION: u32 = 1;
const SCALER_PREFIX: &str = "scaler.";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub version: u32,
    pub kind: ModelKind,
    pub config: serde_json::Value,
    pub params: ParamSet,
    pub scaler_arrays: Vec<(String, Tensor)>,
}

/// Total element count of the trainable arrays.
pub fn count_parameters(checkpoint: &ModelCheckpoint) -> usize {
    checkpoint.params.numel()
}

fn vec_tensor(v: &[f64]) -> Tensor {
    Tensor::new(&[v.len().max(1)], if v.is_empty() { vec![0.0] } else { v.to_vec() }).unwrap()
}

impl ModelCheckpoint {
    pub fn new(model: &Model, scaler: Option<&FeatureScaler>) -> Self {
        let mut params = ParamSet::default();
        for (name, t) in model.params().iter() {
            params.push(name, Tensor::new(t.shape(), t.data().to_vec()).unwrap());
        }
        let (scaler_meta, scaler_arrays) = match scaler {
            None => (serde_json::Value::Null, Vec::new()),
            Some(s) => (
                json!({
                    "layout": s.layout,
                    "difference_target": s.difference_target,
                    "scale_count": s.scale_count,
                    "hours": s.hours(),
                }),
                vec![
                    ("scaler.raw_min".to_string(), vec_tensor(&s.raw_min)),
                    ("scaler.raw_max".to_string(), vec_tensor(&s.raw_max)),
                    ("scaler.scalogram_min".to_string(), vec_tensor(&s.scalogram_min)),
                    ("scaler.scalogram_max".to_string(), vec_tensor(&s.scalogram_max)),
                    ("scaler.target".to_string(), vec_tensor(&[s.target_min, s.target_max])),
                ],
            ),
        };
        Self {
            version: CHECKPOINT_VERSION,
            kind: model.kind(),
            config: json!({ "model": model.config_json(), "scaler": scaler_meta }),
            params,
            scaler_arrays,
        }
    }

    pub fn model(&self) -> Result<Model> {
        let mut params = ParamSet::default();
        for (name, t) in self.params.iter() {
            params.push(name, t.clone().trainable());
        }
        Model::from_parts(self.kind, self.config["model"].clone(), params)
    }

    pub fn scaler(&self) -> Result<Option<FeatureScaler>> {
        let meta = &self.config["scaler"];
        if meta.is_null() {
            return Ok(None);
        }
        let bad = |m: &str| Error::format(None, format!("checkpoint scaler: {m}"));
        let layout: ChannelLayout =
            serde_json::from_value(meta["layout"].clone()).map_err(|e| bad(&e.to_string()))?;
        let array = |name: &str| -> Result<Vec<f64>> {
            self.scaler_arrays
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.data().to_vec())
                .ok_or_else(|| bad(&format!("missing {name}")))
        };
        let target = array("scaler.target")?;
        if target.len() != 2 {
            return Err(bad("target range must hold two values"));
        }
        let usize_of = |k: &str| meta[k].as_u64().map(|v| v as usize).ok_or_else(|| bad(k));
        FeatureScaler::from_parts(
            layout,
            meta["difference_target"].as_bool().ok_or_else(|| bad("difference_target"))?,
            array("scaler.raw_min")?,
            array("scaler.raw_max")?,
            array("scaler.scalogram_min")?,
            array("scaler.scalogram_max")?,
            (target[0], target[1]),
            usize_of("scale_count")?,
            usize_of("hours")?,
        )
        .map(Some)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.push(self.kind.tag());
        let config = self.config.to_string();
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(config.as_bytes());
        let arrays: Vec<(&str, &Tensor)> = self
            .params
            .iter()
            .chain(self.scaler_arrays.iter().map(|(n, t)| (n.as_str(), t)))
            .collect();
        out.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
        for (name, t) in arrays {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::format(None, "not a checkpoint (bad magic bytes)"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(
                None,
                format!("checkpoint version {version}, expected {CHECKPOINT_VERSION}"),
            ));
        }
        let tag = r.take(1)?[0];
        let kind = ModelKind::from_tag(tag).ok_or_else(|| Error::format(None, format!("unknown model tag {tag}")))?;
        let config_len = r.u32()? as usize;
        let config: serde_json::Value = serde_json::from_slice(r.take(config_len)?)
            .map_err(|e| Error::format(None, format!("config block: {e}")))?;
        let count = r.u32()?;
        let mut params = ParamSet::default();
        let mut scaler_arrays = Vec::new();
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::format(None, "array name is not UTF-8"))?;
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let numel = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .filter(|n| n.checked_mul(8).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| Error::format(None, format!("array {name} is truncated")))?;
            let data = r
                .take(numel * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let t = Tensor::new(&shape, data).map_err(|e| Error::format(None, format!("array {name}: {e}")))?;
            if name.starts_with(SCALER_PREFIX) {
                scaler_arrays.push((name, t));
            } else {
                params.push(name, t);
            }
        }
        if r.remaining() != 0 {
            return Err(Error::format(None, format!("{} trailing bytes", r.remaining())));
        }
        Ok(Self {
            version,
            kind,
            config,
            params,
            scaler_arrays,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::format(None, "checkpoint is truncated"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn save_checkpoint(model: &Model, scaler: Option<&FeatureScaler>, path: impl AsRef<Path>) -> Result<()> {
    ModelCheckpoint::new(model, scaler).save(path)
}

/// Loads a model and, when present, the scaler it was trained with. No
/// partial model is returned on error.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Model, Option<FeatureScaler>)> {
    let ckpt = ModelCheckpoint::load(path)?;
    Ok((ckpt.model()?, ckpt.scaler()?))
}
