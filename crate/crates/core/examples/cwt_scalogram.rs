//! Scalogram of one day mixing a 6-hour and a 24-hour cycle, printed as the
//! dominant pseudo-period per hour and a coarse intensity map.

use std::f64::consts::PI;

use heatcast::signal::{cwt_scalogram, default_scales, Wavelet, SCALE_COUNT};

fn main() -> heatcast::Result<()> {
    let x: Vec<f64> = (0..24)
        .map(|t| {
            let t = t as f64;
            (2.0 * PI * t / 24.0).sin() + 0.6 * (2.0 * PI * t / 6.0).cos()
        })
        .collect();
    let wavelet = Wavelet::default();
    let scales = default_scales(SCALE_COUNT);
    let g = cwt_scalogram(&x, &scales, wavelet)?;

    let peak = g.grid().iter().cloned().fold(0.0, f64::max);
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    println!("period(h)  hour 0 .. 23");
    for j in (0..scales.len()).rev() {
        let row: String = (0..24)
            .map(|b| shades[((g.get(b, j) / peak) * 9.0).round() as usize])
            .collect();
        println!("{:>8.1}   {row}", 1.0 / wavelet.pseudo_frequency(scales[j]));
    }
    println!();
    for b in (0..24).step_by(3) {
        let j = (0..scales.len()).max_by(|&i, &k| g.get(b, i).total_cmp(&g.get(b, k))).unwrap();
        println!("hour {b:>2}: strongest period {:.1} h", 1.0 / wavelet.pseudo_frequency(scales[j]));
    }
    Ok(())
}
