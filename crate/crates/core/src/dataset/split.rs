use std::collections::BTreeSet;

use chrono::{DateTime, Datelike, Utc};

use super::SampleWindow;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_year: i32,
    pub train_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_year: 2019,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Vec<SampleWindow>,
    pub val: Vec<SampleWindow>,
    pub test: Vec<SampleWindow>,
}

/// Test = every window whose origin lies in `test_year`; the remaining
/// origins are split chronologically, the first `train_fraction` (rounded)
/// going to training. All DMAs sharing an origin land in the same split.
pub fn make_splits(windows: Vec<SampleWindow>, spec: &SplitSpec) -> Result<Splits> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::contract(format!(
            "train_fraction {} must lie in (0, 1)",
            spec.train_fraction
        )));
    }
    let (test, rest): (Vec<_>, Vec<_>) = windows
        .into_iter()
        .partition(|w| w.origin.year() == spec.test_year);
    if test.is_empty() {
        return Err(Error::contract(format!("no windows fall in test year {}", spec.test_year)));
    }
    let origins: BTreeSet<DateTime<Utc>> = rest.iter().map(|w| w.origin).collect();
    if origins.len() < 2 {
        return Err(Error::contract(format!(
            "{} non-test origins; need at least 2 for a train/validation split",
            origins.len()
        )));
    }
    let n_train = ((origins.len() as f64 * spec.train_fraction).round() as usize).clamp(1, origins.len() - 1);
    let boundary = *origins.iter().nth(n_train).unwrap();
    let (mut train, mut val): (Vec<_>, Vec<_>) = rest.into_iter().partition(|w| w.origin < boundary);
    let mut test = test;
    for part in [&mut train, &mut val, &mut test] {
        part.sort_by(|a, b| a.origin.cmp(&b.origin).then_with(|| a.dma_id.cmp(&b.dma_id)));
    }
    Ok(Splits { train, val, test })
}
