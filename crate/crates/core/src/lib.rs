//! Heat demand forecasting from wavelet scalograms.
//!
//! The crate is organised bottom-up:
//!
//! - [`autograd`]: a small tape-based reverse-mode differentiation engine
//!   with the tensor operations, loss and ADAM optimizer the models need.
//! - [`signal`]: continuous wavelet transform scalograms, classical seasonal
//!   decomposition, differencing, cyclical encoding, outlier removal and
//!   imputation.
//! - [`dataset`]: CSV ingestion, per-DMA aggregation, feature windows,
//!   chronological splits, scaling and a seeded synthetic data generator.
//! - [`models`]: the stacked LSTM baseline, the single-stack scalogram CNN
//!   (`F`) and the dual-branch cross-attention network (`F'`), plus
//!   checkpoint persistence.
//! - [`training`]: mini-batch training with early stopping and grid search.
//! - [`eval`]: MAE/MAPE metrics, evaluation reports and CSV export.
//! - [`pipeline`] and [`cli`]: the end-to-end workflow and its command line.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod autograd;
pub mod cli;
pub mod config;
pub mod dataset;
mod error;
pub mod eval;
pub mod models;
pub mod pipeline;
pub mod signal;
pub mod training;

pub use error::{Error, Result};
