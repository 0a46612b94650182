//! Meter CSV → cleaned DMA series: corrupts a few readings, then runs
//! ingestion, aggregation, outlier removal and imputation.

use heatcast::dataset::{ingest_meter_csv, ingest_weather_csv, synth_generate, write_meter_csv, write_weather_csv, SynthConfig};
use heatcast::pipeline::preprocess;
use heatcast::signal::DEFAULT_Z_THRESHOLD;

fn main() -> heatcast::Result<()> {
    let data = synth_generate(&SynthConfig {
        n_days: 30,
        ..SynthConfig::default()
    })?;
    let mut meters = data.meter_readings(2);
    let start = meters[0].timestamp;
    let hour = |m: &heatcast::dataset::MeterReading| (m.timestamp - start).num_hours();
    // a spike and a negative reading on DMA-A, then a six-hour outage on DMA-B
    for m in meters.iter_mut().filter(|m| m.dma_id == "DMA-A") {
        match hour(m) {
            200 => m.consumption_kwh *= 40.0,
            300 => m.consumption_kwh = -3.0,
            _ => {}
        }
    }
    meters.retain(|m| !(m.dma_id == "DMA-B" && (400..406).contains(&hour(m))));

    let dir = std::env::temp_dir().join("heatcast-preprocess-example");
    std::fs::create_dir_all(&dir).map_err(|e| heatcast::Error::Io { path: dir.clone(), source: e })?;
    write_meter_csv(dir.join("meters.csv"), &meters)?;
    write_weather_csv(dir.join("weather.csv"), &data.weather_records())?;

    let m = ingest_meter_csv(dir.join("meters.csv"))?;
    let w = ingest_weather_csv(dir.join("weather.csv"))?;
    let (clean, summary) = preprocess(&m.records, &w.records, DEFAULT_Z_THRESHOLD)?;
    println!("{} readings in, {} hours out", m.records.len(), summary.hours);
    for (dma, series) in &clean.demand {
        println!(
            "{dma}: {} outliers removed, {} hours imputed, mean {:.3} kWh",
            summary.outliers[dma],
            summary.imputed[dma],
            series.values.iter().sum::<f64>() / series.len() as f64
        );
    }
    Ok(())
}
