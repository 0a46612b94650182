//! Classical additive decomposition of two weeks of synthetic DMA demand.

use heatcast::dataset::{synth_generate, SynthConfig};
use heatcast::signal::seasonal_decompose;

fn main() -> heatcast::Result<()> {
    let data = synth_generate(&SynthConfig {
        n_days: 21,
        dma_count: 1,
        ..SynthConfig::default()
    })?;
    let (dma, series) = data.demand.iter().next().unwrap();
    let d = seasonal_decompose(series, 24)?;

    println!("{dma}: daily seasonal profile (kWh)");
    for (h, v) in d.profile().iter().enumerate() {
        println!("  {h:02}:00  {v:+.3}");
    }
    let valid: Vec<usize> = (0..series.len()).filter(|&t| d.mask[t]).collect();
    let worst = valid
        .iter()
        .map(|&t| (d.trend[t] + d.seasonal[t] + d.residual[t] - series.values[t]).abs())
        .fold(0.0, f64::max);
    let resid = valid.iter().map(|&t| d.residual[t].powi(2)).sum::<f64>() / valid.len() as f64;
    println!(
        "{} of {} hours have a trend; max |sum - observed| = {worst:.1e}; residual RMS {:.4}",
        valid.len(),
        series.len(),
        resid.sqrt()
    );
    Ok(())
}
