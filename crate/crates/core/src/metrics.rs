//! Forecast accuracy: MAE, RMSE, MAPE and the Lewis accuracy scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::Accumulator;

/// Lewis classification of a MAPE value (percent).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyClass {
    High,
    Good,
    Reasonable,
    Inaccurate,
}

impl AccuracyClass {
    /// `< 10` high, `[10, 20)` good, `[20, 50]` reasonable, `> 50` inaccurate.
    pub fn from_mape(mape: f64) -> Self {
        if mape < 10.0 {
            Self::High
        } else if mape < 20.0 {
            Self::Good
        } else if mape <= 50.0 {
            Self::Reasonable
        } else {
            Self::Inaccurate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub mae: f64,
    pub rmse: f64,
    /// Mean absolute error relative to the fitted values, in percent.
    pub mape: f64,
    /// Mean absolute error relative to the observed values, in percent.
    pub mape_observed: f64,
    pub n: usize,
    pub classification: AccuracyClass,
}

/// Accuracy of `predicted` against `observed`, with errors `e_i = x_i - x_hat_i`.
pub fn accuracy(observed: &[f64], predicted: &[f64]) -> Result<AccuracyReport> {
    if observed.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Err(Error::InvalidInput("accuracy needs at least one pair".into()));
    }
    if let Some(bad) = observed.iter().chain(predicted).find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "observed and predicted values must be strictly positive, got {bad}"
        )));
    }
    let mut abs = Accumulator::default();
    let mut sq = Accumulator::default();
    let mut rel_pred = Accumulator::default();
    let mut rel_obs = Accumulator::default();
    for (&x, &xh) in observed.iter().zip(predicted) {
        let e = x - xh;
        abs.add(e.abs());
        sq.add(e * e);
        rel_pred.add(e.abs() / xh);
        rel_obs.add(e.abs() / x);
    }
    let n = observed.len() as f64;
    let mae = abs.value() / n;
    let rmse = (sq.value() / n).sqrt();
    let mape = 100.0 * rel_pred.value() / n;
    Ok(AccuracyReport {
        mae,
        // sqrt rounding can put RMSE an ulp under MAE when all |e| are equal
        rmse: rmse.max(mae),
        mape,
        mape_observed: 100.0 * rel_obs.value() / n,
        n: observed.len(),
        classification: AccuracyClass::from_mape(mape),
    })
}
