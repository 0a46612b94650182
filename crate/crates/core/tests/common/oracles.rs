//! Independent reference implementations.

/// Real Morlet with ω₀ = 6, written out directly.
pub fn morlet(u: f64) -> f64 {
    (-u * u / 2.0).exp() * (6.0 * u).cos()
}

/// Direct double-loop CWT magnitude `|Σ_t x[t]·ψ((t−b)/a)/√a|`; row `b`,
/// column `j`.
pub fn brute_cwt(x: &[f64], scales: &[f64]) -> Vec<Vec<f64>> {
    (0..x.len())
        .map(|b| {
            scales
                .iter()
                .map(|&a| {
                    let mut acc = 0.0;
                    for (t, &xt) in x.iter().enumerate() {
                        acc += xt * morlet((t as f64 - b as f64) / a) / a.sqrt();
                    }
                    acc.abs()
                })
                .collect()
        })
        .collect()
}

/// Element-wise relative error with a floor far below any entry of
/// interest.
pub fn max_rel_err(got: impl Fn(usize, usize) -> f64, want: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (b, row) in want.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            let g = got(b, j);
            worst = worst.max((g - w).abs() / w.abs().max(1e-300));
        }
    }
    worst
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Points whose distance to the ±84 h rolling median exceeds
/// `z·1.4826·MAD`, by full sorting.
pub fn brute_outliers(x: &[f64], z: f64) -> Vec<bool> {
    (0..x.len())
        .map(|i| {
            if x[i].is_nan() {
                return false;
            }
            let lo = i.saturating_sub(84);
            let hi = (i + 85).min(x.len());
            let w: Vec<f64> = x[lo..hi].iter().copied().filter(|v| !v.is_nan()).collect();
            let m = median(w.clone());
            let mad = median(w.iter().map(|v| (v - m).abs()).collect());
            (x[i] - m).abs() > z * 1.4826 * mad
        })
        .collect()
}
