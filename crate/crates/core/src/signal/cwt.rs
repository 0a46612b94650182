use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default scalogram extent: 24 hourly positions by 24 scales.
pub const WINDOW_HOURS: usize = 24;
pub const SCALE_COUNT: usize = 24;

/// Mother wavelet used for the continuous wavelet transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Wavelet {
    /// Real Morlet `ψ(u) = exp(−u²/2)·cos(ω₀u)`.
    Morlet { omega0: f64 },
}

impl Default for Wavelet {
    fn default() -> Self {
        Wavelet::Morlet { omega0: 6.0 }
    }
}

impl Wavelet {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Wavelet::Morlet { omega0 } => (-0.5 * u * u).exp() * (omega0 * u).cos(),
        }
    }

    pub fn center_frequency(&self) -> f64 {
        match *self {
            Wavelet::Morlet { omega0 } => omega0,
        }
    }

    /// Pseudo-frequency in cycles per sample, `ω₀ / (2π·a)`.
    pub fn pseudo_frequency(&self, scale: f64) -> f64 {
        self.center_frequency() / (2.0 * PI * scale)
    }

    /// Scale whose pseudo-period equals `period` samples.
    pub fn scale_for_period(&self, period: f64) -> f64 {
        self.center_frequency() * period / (2.0 * PI)
    }
}

/// `s` geometrically spaced scales whose pseudo-periods run from
/// `min_period` to `max_period` samples.
pub fn geometric_scales(s: usize, min_period: f64, max_period: f64, wavelet: Wavelet) -> Vec<f64> {
    let lo = wavelet.scale_for_period(min_period);
    if s <= 1 {
        return vec![lo; s];
    }
    let hi = wavelet.scale_for_period(max_period);
    let ratio = (hi / lo).powf(1.0 / (s - 1) as f64);
    (0..s).map(|j| lo * ratio.powi(j as i32)).collect()
}

/// Default Morlet scale grid covering pseudo-periods of 2 to 48 hours.
pub fn default_scales(s: usize) -> Vec<f64> {
    geometric_scales(s, 2.0, 2.0 * WINDOW_HOURS as f64, Wavelet::default())
}

/// `h×s` grid of CWT magnitudes; row `b` is the time shift, column `j` the
/// scale index.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    grid: Vec<f64>,
    positions: usize,
    scales: Vec<f64>,
    pub wavelet: Wavelet,
}

impl Scalogram {
    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn get(&self, b: usize, j: usize) -> f64 {
        self.grid[b * self.scales.len() + j]
    }

    /// Row-major `[b][j]` magnitudes.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Scale-major `[j][b]` layout, so that each column is one time step.
    pub fn scale_major(&self) -> Vec<f64> {
        let s = self.scales.len();
        let mut out = vec![0.0; self.grid.len()];
        for b in 0..self.positions {
            for j in 0..s {
                out[j * self.positions + b] = self.grid[b * s + j];
            }
        }
        out
    }
}

/// Precomputed wavelet taps for a fixed window length and scale grid.
#[derive(Debug, Clone)]
pub struct CwtPlan {
    len: usize,
    scales: Vec<f64>,
    wavelet: Wavelet,
    // taps[(j * len + b) * len + t] = ψ((t − b)/a_j) / √a_j
    taps: Vec<f64>,
}

impl CwtPlan {
    pub fn new(len: usize, scales: &[f64], wavelet: Wavelet) -> Result<Self> {
        if len == 0 {
            return Err(Error::contract("cwt: window must not be empty"));
        }
        if let Some(bad) = scales.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::Domain(format!("cwt: scale {bad} is not positive")));
        }
        if scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::contract("cwt: scales must be strictly increasing"));
        }
        let mut taps = Vec::with_capacity(scales.len() * len * len);
        for &a in scales {
            let norm = 1.0 / a.sqrt();
            for b in 0..len {
                for t in 0..len {
                    taps.push(norm * wavelet.eval((t as f64 - b as f64) / a));
                }
            }
        }
        Ok(Self {
            len,
            scales: scales.to_vec(),
            wavelet,
            taps,
        })
    }

    /// Scalogram of one window; samples outside the window count as zero.
    pub fn transform(&self, window: &[f64]) -> Result<Scalogram> {
        if window.len() != self.len {
            return Err(Error::dim(format!(
                "cwt: window of {} samples, plan expects {}",
                window.len(),
                self.len
            )));
        }
        if window.iter().any(|v| v.is_nan()) {
            return Err(Error::contract("cwt: window contains NaN"));
        }
        let s = self.scales.len();
        let mut grid = vec![0.0; self.len * s];
        for j in 0..s {
            for b in 0..self.len {
                let taps = &self.taps[(j * self.len + b) * self.len..][..self.len];
                let coeff: f64 = taps.iter().zip(window).map(|(k, x)| k * x).sum();
                grid[b * s + j] = coeff.abs();
            }
        }
        Ok(Scalogram {
            grid,
            positions: self.len,
            scales: self.scales.clone(),
            wavelet: self.wavelet,
        })
    }
}

/// Magnitude scalogram `|Σ_t x[t]·ψ((t−b)/a)/√a|` of a single window.
pub fn cwt_scalogram(window: &[f64], scales: &[f64], wavelet: Wavelet) -> Result<Scalogram> {
    CwtPlan::new(window.len(), scales, wavelet)?.transform(window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_window_gives_zero_grid() {
        let g = cwt_scalogram(&[0.0; 24], &default_scales(24), Wavelet::default()).unwrap();
        assert!(g.grid().iter().all(|&v| v == 0.0));
        assert_eq!(g.grid().len(), 24 * 24);
    }

    #[test]
    fn rejects_bad_scales_and_nan() {
        let w = Wavelet::default();
        assert!(matches!(cwt_scalogram(&[1.0; 4], &[0.0, 1.0], w), Err(Error::Domain(_))));
        assert!(matches!(cwt_scalogram(&[1.0; 4], &[-2.0], w), Err(Error::Domain(_))));
        assert!(matches!(
            cwt_scalogram(&[1.0, f64::NAN], &[1.0], w),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn default_scale_grid() {
        assert_eq!(default_scales(1).len(), 1);
        let s = default_scales(24);
        let r0 = s[1] / s[0];
        for w in s.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] / w[0] - r0).abs() < 1e-12);
        }
        let w = Wavelet::default();
        let p_lo = 1.0 / w.pseudo_frequency(s[0]);
        let p_hi = 1.0 / w.pseudo_frequency(s[23]);
        assert!((p_lo - 2.0).abs() / 2.0 < 0.01);
        assert!((p_hi - 48.0).abs() / 48.0 < 0.01);
    }

    #[test]
    fn scale_major_is_transpose() {
        let x: Vec<f64> = (0..6).map(|t| (t as f64).sin()).collect();
        let g = cwt_scalogram(&x, &[1.0, 2.0, 3.0], Wavelet::default()).unwrap();
        let sm = g.scale_major();
        for b in 0..6 {
            for j in 0..3 {
                assert_eq!(sm[j * 6 + b], g.get(b, j));
            }
        }
    }
}
