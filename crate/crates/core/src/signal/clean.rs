use super::{TimeSeries, Unit};
use crate::{Error, Result};

/// Half-width of the rolling window used by [`remove_outliers`] (169 hours).
pub const OUTLIER_HALF_WINDOW: usize = 84;
pub const DEFAULT_Z_THRESHOLD: f64 = 5.0;
/// Consistency constant turning a MAD into a normal standard deviation.
const MAD_SCALE: f64 = 1.4826;
/// Gaps up to this many hours are linearly interpolated.
pub const MAX_INTERPOLATED_GAP: usize = 6;

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (left, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Marks points further than `z_threshold` robust standard deviations from
/// the 169-hour rolling median as missing.
///
/// Returns the cleaned series and a mask that is `true` where a point was
/// removed. Already-missing points are ignored and never flagged.
pub fn remove_outliers(series: &TimeSeries, z_threshold: f64) -> Result<(TimeSeries, Vec<bool>)> {
    if !(z_threshold > 0.0) {
        return Err(Error::Domain(format!(
            "remove_outliers: threshold {z_threshold} must be positive"
        )));
    }
    let v = &series.values;
    if v.iter().all(|x| x.is_nan()) {
        return Err(Error::contract("remove_outliers: series has no observed values"));
    }
    let n = v.len();
    let mut mask = vec![false; n];
    let mut window = Vec::with_capacity(2 * OUTLIER_HALF_WINDOW + 1);
    for i in 0..n {
        if v[i].is_nan() {
            continue;
        }
        let lo = i.saturating_sub(OUTLIER_HALF_WINDOW);
        let hi = (i + OUTLIER_HALF_WINDOW + 1).min(n);
        window.clear();
        window.extend(v[lo..hi].iter().copied().filter(|x| !x.is_nan()));
        let med = median_in_place(&mut window);
        window.iter_mut().for_each(|x| *x = (*x - med).abs());
        let sigma = MAD_SCALE * median_in_place(&mut window);
        mask[i] = (v[i] - med).abs() > z_threshold * sigma;
    }
    let cleaned = v
        .iter()
        .zip(&mask)
        .map(|(&x, &m)| if m { f64::NAN } else { x })
        .collect();
    Ok((series.with_values(cleaned), mask))
}

/// Fills missing hours.
///
/// Negative consumption is treated as missing first. Gaps of at most six
/// hours with observations on both sides are linearly interpolated; other
/// gaps take the value from one week earlier, else one day earlier, else the
/// mean of the observed values.
pub fn impute_missing(series: &TimeSeries) -> Result<TimeSeries> {
    if series.is_empty() {
        return Err(Error::contract("impute_missing: empty series"));
    }
    let mut v: Vec<f64> = series
        .values
        .iter()
        .map(|&x| {
            if series.unit == Unit::Kwh && x < 0.0 {
                f64::NAN
            } else {
                x
            }
        })
        .collect();
    let observed: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if observed.is_empty() {
        return Err(Error::contract("impute_missing: no observed values"));
    }
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;

    let n = v.len();
    let mut i = 0;
    while i < n {
        if !v[i].is_nan() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && v[i].is_nan() {
            i += 1;
        }
        let end = i;
        if end - start <= MAX_INTERPOLATED_GAP && start > 0 && end < n {
            let (a, b) = (v[start - 1], v[end]);
            let span = (end - start + 1) as f64;
            for (k, slot) in v[start..end].iter_mut().enumerate() {
                *slot = a + (b - a) * (k + 1) as f64 / span;
            }
        } else {
            for j in start..end {
                v[j] = [168usize, 24]
                    .iter()
                    .filter_map(|&lag| j.checked_sub(lag).map(|k| v[k]))
                    .find(|x| !x.is_nan())
                    .unwrap_or(mean);
            }
        }
    }
    Ok(series.with_values(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn kwh(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap(), values, Unit::Kwh).unwrap()
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median_in_place(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_in_place(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn spike_is_the_only_outlier() {
        let mut v = vec![2.0; 400];
        v[123] = 200.0;
        let (clean, mask) = remove_outliers(&kwh(v), 5.0).unwrap();
        assert_eq!(mask.len(), 400);
        assert_eq!(mask.iter().filter(|m| **m).count(), 1);
        assert!(mask[123] && clean.values[123].is_nan());
        let (_, none) = remove_outliers(&kwh(vec![2.0; 50]), 5.0).unwrap();
        assert!(none.iter().all(|m| !m));
    }

    #[test]
    fn outlier_errors() {
        assert!(remove_outliers(&kwh(vec![f64::NAN; 3]), 5.0).is_err());
        assert!(remove_outliers(&kwh(vec![1.0; 3]), 0.0).is_err());
    }

    #[test]
    fn interpolation_and_negative() {
        let s = impute_missing(&kwh(vec![1.0, 2.0, f64::NAN, 4.0])).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0, 3.0, 4.0]);
        let s = impute_missing(&kwh(vec![2.0, -1.0, 4.0])).unwrap();
        assert_eq!(s.values, vec![2.0, 3.0, 4.0]);
        let ident = vec![1.0, 5.0, 2.0];
        assert_eq!(impute_missing(&kwh(ident.clone())).unwrap().values, ident);
        assert!(impute_missing(&kwh(vec![])).is_err());
    }

    #[test]
    fn long_gap_uses_week_then_day_then_mean() {
        let mut v: Vec<f64> = (0..400).map(|i| (i % 24) as f64).collect();
        for x in &mut v[200..210] {
            *x = f64::NAN;
        }
        let s = impute_missing(&kwh(v.clone())).unwrap();
        for j in 200..210 {
            assert_eq!(s.values[j], v[j - 168]);
        }
        // no week of history: falls back to the previous day
        let mut w: Vec<f64> = (0..60).map(|i| i as f64).collect();
        for x in &mut w[30..40] {
            *x = f64::NAN;
        }
        let s = impute_missing(&kwh(w)).unwrap();
        assert_eq!(s.values[30], 6.0);
        // leading gap with no history at all: series mean
        let s = impute_missing(&kwh(vec![f64::NAN, 2.0, 4.0])).unwrap();
        assert_eq!(s.values[0], 3.0);
    }

    #[test]
    fn temperatures_may_be_negative() {
        let t = TimeSeries::new(Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap(), vec![-3.0, -2.0], Unit::Celsius)
            .unwrap();
        assert_eq!(impute_missing(&t).unwrap().values, vec![-3.0, -2.0]);
    }
}
