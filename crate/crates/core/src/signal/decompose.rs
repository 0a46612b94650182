use super::TimeSeries;
use crate::{Error, Result};

/// Additive split `series = trend + seasonal + residual`.
///
/// `trend` and `residual` are `NaN` where `mask` is false, i.e. where the
/// centred moving average is undefined at either end of the series.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
    pub period: usize,
    pub mask: Vec<bool>,
}

impl DecompositionResult {
    /// One period of the seasonal component, aligned to the series start.
    pub fn profile(&self) -> &[f64] {
        &self.seasonal[..self.period]
    }
}

/// Centred moving average of width `period`. Even periods use the `2×period`
/// average (half weights at both ends). Undefined positions are `NaN`.
pub fn centered_moving_average(values: &[f64], period: usize) -> Vec<f64> {
    let n = values.len();
    let half = period / 2;
    let mut out = vec![f64::NAN; n];
    if period == 0 || n < 2 * half + 1 {
        return out;
    }
    for (i, slot) in out.iter_mut().enumerate().take(n - half).skip(half) {
        let window = &values[i - half..=i + half];
        *slot = if period % 2 == 1 {
            window.iter().sum::<f64>() / period as f64
        } else {
            let inner: f64 = window[1..period].iter().sum();
            (inner + 0.5 * (window[0] + window[period])) / period as f64
        };
    }
    out
}

/// Classical additive decomposition of a gap-free series.
pub fn seasonal_decompose(series: &TimeSeries, period: usize) -> Result<DecompositionResult> {
    decompose_values(&series.values, period)
}

pub fn decompose_values(values: &[f64], period: usize) -> Result<DecompositionResult> {
    if period == 0 {
        return Err(Error::contract("seasonal_decompose: period must be positive"));
    }
    if values.len() < 2 * period {
        return Err(Error::contract(format!(
            "seasonal_decompose: {} observations, need at least {}",
            values.len(),
            2 * period
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("seasonal_decompose: series has missing values"));
    }
    let trend = centered_moving_average(values, period);
    let mask: Vec<bool> = trend.iter().map(|t| !t.is_nan()).collect();

    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (i, (&x, &t)) in values.iter().zip(&trend).enumerate() {
        if !t.is_nan() {
            sums[i % period] += x - t;
            counts[i % period] += 1;
        }
    }
    let mut profile: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let mean = profile.iter().sum::<f64>() / period as f64;
    profile.iter_mut().for_each(|p| *p -= mean);

    Ok(apply_profile(values, trend, &profile, mask))
}

/// Decomposition of `values` re-using a seasonal `profile` fitted elsewhere.
/// `profile[k]` applies to positions `i` with `i % profile.len() == k`.
pub fn decompose_with_profile(values: &[f64], profile: &[f64]) -> Result<DecompositionResult> {
    if profile.is_empty() {
        return Err(Error::contract("decompose_with_profile: empty profile"));
    }
    let trend = centered_moving_average(values, profile.len());
    let mask = trend.iter().map(|t| !t.is_nan()).collect();
    Ok(apply_profile(values, trend, profile, mask))
}

fn apply_profile(values: &[f64], trend: Vec<f64>, profile: &[f64], mask: Vec<bool>) -> DecompositionResult {
    let period = profile.len();
    let seasonal: Vec<f64> = (0..values.len()).map(|i| profile[i % period]).collect();
    let residual = values
        .iter()
        .zip(&trend)
        .zip(&seasonal)
        .map(|((x, t), s)| x - t - s)
        .collect();
    DecompositionResult {
        trend,
        seasonal,
        residual,
        period,
        mask,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let d = decompose_values(&[3.5; 100], 24).unwrap();
        for i in 0..100 {
            assert_eq!(d.seasonal[i], 0.0);
            if d.mask[i] {
                assert_eq!(d.trend[i], 3.5);
                assert_eq!(d.residual[i], 0.0);
            }
        }
        assert_eq!(d.mask.iter().filter(|m| !**m).count(), 24);
    }

    #[test]
    fn odd_period_mask() {
        let v: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let d = decompose_values(&v, 5).unwrap();
        assert!(!d.mask[1] && d.mask[2] && d.mask[17] && !d.mask[18]);
        assert!((d.trend[10] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        assert!(matches!(decompose_values(&[1.0; 47], 24), Err(Error::Contract(_))));
        assert!(matches!(decompose_values(&[1.0, f64::NAN, 1.0, 1.0], 2), Err(Error::Contract(_))));
    }
}
