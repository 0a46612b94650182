//! Time-frequency and decomposition transforms over hourly series.

mod clean;
mod cwt;
mod decompose;
mod series;
mod transform;

pub use clean::{impute_missing, remove_outliers, DEFAULT_Z_THRESHOLD, MAX_INTERPOLATED_GAP, OUTLIER_HALF_WINDOW};
pub use cwt::{cwt_scalogram, default_scales, geometric_scales, CwtPlan, Scalogram, Wavelet, SCALE_COUNT, WINDOW_HOURS};
pub use decompose::{
    centered_moving_average, decompose_values, decompose_with_profile, seasonal_decompose, DecompositionResult,
};
pub use series::{is_whole_hour, TimeSeries, Unit};
pub use transform::{cyclical_encode, difference, invert_difference};
