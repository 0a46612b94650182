use crate::autograd::Tensor;
use crate::signal::{default_scales, invert_difference, CwtPlan, Wavelet};
use crate::{Error, Result};

use super::{ChannelLayout, SampleWindow};

/// Model-ready tensors for one [`SampleWindow`].
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSample {
    /// `N_c × scales × hours`, scaled scalograms of the endogenous channels.
    pub endogenous: Tensor,
    /// `(N_w + N_t) × scales × hours`.
    pub exogenous: Tensor,
    /// `hours × (N_c + N_w + N_t)` scaled raw values, one row per hour.
    pub sequence: Tensor,
    /// Scaled training target.
    pub target: Vec<f64>,
}

/// Per-channel min-max scaling, fitted on training windows only.
///
/// Raw channel values are scaled to `[0, 1]` before the wavelet transform,
/// so every scalogram sees a non-negative signal and the sign of differenced
/// or cyclical inputs survives the magnitude. The resulting scalograms are
/// scaled again per channel. Targets are scaled as the lag difference
/// `target − seed` when `difference_target` is set, otherwise as levels.
#[derive(Debug, Clone)]
pub struct FeatureScaler {
    pub layout: ChannelLayout,
    pub difference_target: bool,
    pub raw_min: Vec<f64>,
    pub raw_max: Vec<f64>,
    pub scalogram_min: Vec<f64>,
    pub scalogram_max: Vec<f64>,
    pub target_min: f64,
    pub target_max: f64,
    pub scale_count: usize,
    hours: usize,
    plan: CwtPlan,
}

impl PartialEq for FeatureScaler {
    fn eq(&self, other: &Self) -> bool {
        self.layout == other.layout
            && self.difference_target == other.difference_target
            && self.raw_min == other.raw_min
            && self.raw_max == other.raw_max
            && self.scalogram_min == other.scalogram_min
            && self.scalogram_max == other.scalogram_max
            && self.target_min == other.target_min
            && self.target_max == other.target_max
            && self.scale_count == other.scale_count
            && self.hours == other.hours
    }
}

fn to_unit(x: f64, lo: f64, hi: f64) -> f64 {
    let range = hi - lo;
    if range > 0.0 {
        (x - lo) / range
    } else {
        x - lo
    }
}

fn from_unit(u: f64, lo: f64, hi: f64) -> f64 {
    let range = hi - lo;
    if range > 0.0 {
        u * range + lo
    } else {
        u + lo
    }
}

fn channels(w: &SampleWindow) -> impl Iterator<Item = &Vec<f64>> {
    w.endogenous.iter().chain(&w.exogenous)
}

fn min_max(acc: &mut [(f64, f64)], idx: usize, values: impl IntoIterator<Item = f64>) {
    for v in values {
        acc[idx].0 = acc[idx].0.min(v);
        acc[idx].1 = acc[idx].1.max(v);
    }
}

impl FeatureScaler {
    pub fn fit(train: &[SampleWindow], layout: &ChannelLayout, difference_target: bool, scale_count: usize) -> Result<Self> {
        let first = train
            .first()
            .ok_or_else(|| Error::contract("cannot fit scaler on an empty training set"))?;
        let hours = first.target.len();
        let c = layout.total();
        let mut raw = vec![(f64::INFINITY, f64::NEG_INFINITY); c];
        let mut target = [(f64::INFINITY, f64::NEG_INFINITY)];
        for w in train {
            check_window(w, layout, hours)?;
            for (i, ch) in channels(w).enumerate() {
                min_max(&mut raw, i, ch.iter().copied());
            }
            let t = Self::target_repr_of(w, difference_target);
            min_max(&mut target, 0, t);
        }
        let mut scaler = Self {
            layout: layout.clone(),
            difference_target,
            raw_min: raw.iter().map(|r| r.0).collect(),
            raw_max: raw.iter().map(|r| r.1).collect(),
            scalogram_min: vec![0.0; c],
            scalogram_max: vec![1.0; c],
            target_min: target[0].0,
            target_max: target[0].1,
            scale_count,
            hours,
            plan: CwtPlan::new(hours, &default_scales(scale_count), Wavelet::default())?,
        };
        let mut scalo = vec![(f64::INFINITY, f64::NEG_INFINITY); c];
        for w in train {
            for (i, ch) in channels(w).enumerate() {
                min_max(&mut scalo, i, scaler.raw_scalogram(i, ch)?);
            }
        }
        scaler.scalogram_min = scalo.iter().map(|r| r.0).collect();
        scaler.scalogram_max = scalo.iter().map(|r| r.1).collect();
        Ok(scaler)
    }

    /// Rebuilds a scaler from persisted statistics.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        layout: ChannelLayout,
        difference_target: bool,
        raw_min: Vec<f64>,
        raw_max: Vec<f64>,
        scalogram_min: Vec<f64>,
        scalogram_max: Vec<f64>,
        target_range: (f64, f64),
        scale_count: usize,
        hours: usize,
    ) -> Result<Self> {
        let c = layout.total();
        if [&raw_min, &raw_max, &scalogram_min, &scalogram_max].iter().any(|v| v.len() != c) {
            return Err(Error::format(None, format!("scaler statistics do not cover {c} channels")));
        }
        Ok(Self {
            layout,
            difference_target,
            raw_min,
            raw_max,
            scalogram_min,
            scalogram_max,
            target_min: target_range.0,
            target_max: target_range.1,
            scale_count,
            hours,
            plan: CwtPlan::new(hours, &default_scales(scale_count), Wavelet::default())?,
        })
    }

    fn target_repr_of(w: &SampleWindow, difference_target: bool) -> Vec<f64> {
        if difference_target {
            w.target.iter().zip(&w.seed).map(|(t, s)| t - s).collect()
        } else {
            w.target.clone()
        }
    }

    fn raw_scalogram(&self, channel: usize, values: &[f64]) -> Result<Vec<f64>> {
        let unit: Vec<f64> = values
            .iter()
            .map(|&v| to_unit(v, self.raw_min[channel], self.raw_max[channel]))
            .collect();
        Ok(self.plan.transform(&unit)?.scale_major())
    }

    pub fn hours(&self) -> usize {
        self.hours
    }

    /// Unscaled training target: the lag difference or the level.
    pub fn target_repr(&self, w: &SampleWindow) -> Vec<f64> {
        Self::target_repr_of(w, self.difference_target)
    }

    pub fn prepare(&self, w: &SampleWindow) -> Result<PreparedSample> {
        check_window(w, &self.layout, self.hours)?;
        let (h, s) = (self.hours, self.scale_count);
        let mut stacks = Vec::with_capacity(self.layout.total() * h * s);
        for (i, ch) in channels(w).enumerate() {
            let g = self.raw_scalogram(i, ch)?;
            stacks.extend(
                g.into_iter()
                    .map(|v| to_unit(v, self.scalogram_min[i], self.scalogram_max[i])),
            );
        }
        let split = self.layout.n_c() * h * s;
        let exo = stacks.split_off(split);
        let total = self.layout.total();
        let mut seq = vec![0.0; h * total];
        for (i, ch) in channels(w).enumerate() {
            for (k, &v) in ch.iter().enumerate() {
                seq[k * total + i] = to_unit(v, self.raw_min[i], self.raw_max[i]);
            }
        }
        Ok(PreparedSample {
            endogenous: Tensor::new(&[self.layout.n_c(), s, h], stacks)?,
            exogenous: Tensor::new(&[self.layout.n_exogenous(), s, h], exo)?,
            sequence: Tensor::new(&[h, total], seq)?,
            target: self
                .target_repr(w)
                .into_iter()
                .map(|v| to_unit(v, self.target_min, self.target_max))
                .collect(),
        })
    }

    /// Maps a scaled model output back to demand in kWh, undoing target
    /// differencing with the window's seed day.
    pub fn decode_forecast(&self, scaled: &[f64], w: &SampleWindow) -> Result<Vec<f64>> {
        if scaled.len() != w.seed.len() {
            return Err(Error::dim(format!(
                "forecast of {} values for a {}-hour window",
                scaled.len(),
                w.seed.len()
            )));
        }
        let repr: Vec<f64> = scaled
            .iter()
            .map(|&u| from_unit(u, self.target_min, self.target_max))
            .collect();
        if self.difference_target {
            let full = invert_difference(&repr, &w.seed, w.seed.len())?;
            Ok(full[w.seed.len()..].to_vec())
        } else {
            Ok(repr)
        }
    }
}

fn check_window(w: &SampleWindow, layout: &ChannelLayout, hours: usize) -> Result<()> {
    if w.endogenous.len() != layout.n_c() || w.exogenous.len() != layout.n_exogenous() {
        return Err(Error::contract(format!(
            "window has {}+{} channels, layout expects {}+{}",
            w.endogenous.len(),
            w.exogenous.len(),
            layout.n_c(),
            layout.n_exogenous()
        )));
    }
    if w.target.len() != hours || w.seed.len() != hours || channels(w).any(|c| c.len() != hours) {
        return Err(Error::dim(format!("window channels must all span {hours} hours")));
    }
    Ok(())
}
