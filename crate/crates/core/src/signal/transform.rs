use std::f64::consts::TAU;

use crate::{Error, Result};

/// `out[i] = series[i + lag] − series[i]`.
pub fn difference(series: &[f64], lag: usize) -> Result<Vec<f64>> {
    if lag == 0 || series.len() <= lag {
        return Err(Error::contract(format!(
            "difference: need more than {lag} observations (and lag > 0), got {}",
            series.len()
        )));
    }
    Ok(series[lag..].iter().zip(series).map(|(a, b)| a - b).collect())
}

/// Inverse of [`difference`]: rebuilds the full series from its first `lag`
/// values.
pub fn invert_difference(diffs: &[f64], seed: &[f64], lag: usize) -> Result<Vec<f64>> {
    if lag == 0 || seed.len() != lag {
        return Err(Error::contract(format!(
            "invert_difference: seed has {} values, lag is {lag}",
            seed.len()
        )));
    }
    let mut out = Vec::with_capacity(diffs.len() + lag);
    out.extend_from_slice(seed);
    for (i, d) in diffs.iter().enumerate() {
        let prev = out[i];
        out.push(prev + d);
    }
    Ok(out)
}

/// `(sin(2π·value/period), cos(2π·value/period))`.
pub fn cyclical_encode(value: f64, period: f64) -> (f64, f64) {
    debug_assert!(period > 0.0);
    (TAU * value / period).sin_cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differences() {
        assert_eq!(difference(&[1.0, 3.0, 6.0], 1).unwrap(), vec![2.0, 3.0]);
        assert_eq!(difference(&[4.0; 5], 2).unwrap(), vec![0.0; 3]);
        assert!(difference(&[1.0, 2.0], 2).is_err());
        assert_eq!(invert_difference(&[2.0, 3.0], &[1.0], 1).unwrap(), vec![1.0, 3.0, 6.0]);
        assert_eq!(
            invert_difference(&[0.0; 4], &[1.0, 2.0], 2).unwrap(),
            vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]
        );
        assert!(invert_difference(&[1.0], &[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn hour_encoding() {
        let close = |(a, b): (f64, f64), (x, y): (f64, f64)| (a - x).abs() < 1e-12 && (b - y).abs() < 1e-12;
        assert!(close(cyclical_encode(0.0, 24.0), (0.0, 1.0)));
        assert!(close(cyclical_encode(6.0, 24.0), (1.0, 0.0)));
        assert!(close(cyclical_encode(12.0, 24.0), (0.0, -1.0)));
    }
}
