//! Ingestion, feature windows, splits and synthetic data.

mod features;
mod ingest;
mod scaler;
mod split;
pub mod synth;

pub use features::{
    build_feature_set, build_features, ChannelLayout, FeatureConfig, FeatureSet, SampleWindow, ENDOGENOUS_CHANNELS,
    TIME_CHANNELS, WEATHER_CHANNELS,
};
pub use ingest::{
    aggregate_dma, format_timestamp, ingest_meter_csv, ingest_weather_csv, parse_timestamp, write_meter_csv,
    write_weather_csv, Ingested, MeterReading, RowError, WeatherRecord, WeatherSeries, METER_HEADER, WEATHER_HEADER,
};
pub use scaler::{FeatureScaler, PreparedSample};
pub use split::{make_splits, SplitSpec, Splits};
pub use synth::{synth_generate, SynthConfig, SynthData};
