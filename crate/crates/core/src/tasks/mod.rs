//! Concrete problem instances: deterministic conflict tasks, synthetic
//! scalar tasks with exact finite-support risks, label-skewed bag-of-words
//! logistic regression, and an ingestion path for the Sentiment140 CSV
//! layout.

mod conflict;
mod diurnal;
mod logistic;
mod sentiment;
mod synthetic;

pub use conflict::two_point_conflict_task;
pub use diurnal::{synthesize_diurnal_dataset, DiurnalConfig};
pub use logistic::{logistic_loss_and_gradient, LogisticTask, SparseExample};
pub use sentiment::{
    ingest_sentiment140, load_dump, write_dump, IngestConfig, IngestSummary,
};
pub use synthetic::{FiniteScalarTask, ScalarLoss};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target positive-label rate per component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewSpec {
    pub rates: Vec<f64>,
}

impl SkewSpec {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::invalid("skew needs at least one component rate"));
        }
        if rates.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::invalid("skew rates must lie strictly in (0, 1)"));
        }
        Ok(SkewSpec { rates })
    }

    /// The diurnal default: rate 2/3 at component 1, 1/3 at component
    /// `1 + m/2`, linear in the cyclic component distance between the two.
    /// For `m = 6` this gives `2/3, 5/9, 4/9, 1/3, 4/9, 5/9`.
    pub fn diurnal_default(components: usize) -> Result<Self> {
        if components < 2 || components % 2 != 0 {
            return Err(Error::invalid(
                "the diurnal default interpolation needs an even component count >= 2",
            ));
        }
        let half = components / 2;
        let (hi, lo) = (2.0 / 3.0, 1.0 / 3.0);
        let rates = (0..components)
            .map(|i0| {
                let dist = i0.min(components - i0); // cyclic distance from component 1
                hi + (lo - hi) * dist as f64 / half as f64
            })
            .collect();
        SkewSpec::new(rates)
    }

    pub fn components(&self) -> usize {
        self.rates.len()
    }

    /// Rate for a 1-based component index.
    pub fn rate(&self, component: usize) -> f64 {
        self.rates[component - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diurnal_default_interpolation() {
        let spec = SkewSpec::diurnal_default(6).unwrap();
        let expect = [
            2.0 / 3.0,
            5.0 / 9.0,
            4.0 / 9.0,
            1.0 / 3.0,
            4.0 / 9.0,
            5.0 / 9.0,
        ];
        for (i, e) in expect.iter().enumerate() {
            assert!(
                (spec.rate(i + 1) - e).abs() < 1e-15,
                "component {} expected {e}",
                i + 1
            );
        }
    }

    #[test]
    fn skew_validation() {
        assert!(SkewSpec::new(vec![]).is_err());
        assert!(SkewSpec::new(vec![0.5, 1.0]).is_err());
        assert!(SkewSpec::new(vec![0.5, 0.0]).is_err());
        assert!(SkewSpec::diurnal_default(5).is_err());
        assert!(SkewSpec::diurnal_default(2).is_ok());
    }
}
