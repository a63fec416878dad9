use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spacing tolerance for declaring a sampling grid uniform.
pub const UNIFORM_TOL: f64 = 1e-9;

/// Observed trajectory: strictly increasing positive times, strictly positive values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    label: String,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: times.len(),
                right: values.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::Validation {
                line: None,
                message: format!("a series needs at least 2 observations, got {}", times.len()),
            });
        }
        for (i, (&t, &x)) in times.iter().zip(&values).enumerate() {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Validation {
                    line: None,
                    message: format!("time #{i} = {t} is not a finite positive number"),
                });
            }
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::Validation {
                    line: None,
                    message: format!("value #{i} = {x} at t={t} is not strictly positive"),
                });
            }
            if i > 0 && t <= times[i - 1] {
                return Err(Error::Validation {
                    line: None,
                    message: format!("times not strictly increasing at #{i} ({t})"),
                });
            }
        }
        Ok(Self {
            times,
            values,
            label: label.into(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first(&self) -> (f64, f64) {
        (self.times[0], self.values[0])
    }

    pub fn last(&self) -> (f64, f64) {
        let n = self.len() - 1;
        (self.times[n], self.values[n])
    }

    /// Step sizes `t_{j+1} - t_j`.
    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform_step().is_some()
    }

    /// The common step `h = t_2 - t_1` when every step is within [`UNIFORM_TOL`] of it.
    pub fn uniform_step(&self) -> Option<f64> {
        let h = self.times[1] - self.times[0];
        self.steps()
            .all(|d| (d - h).abs() <= UNIFORM_TOL)
            .then_some(h)
    }

    /// Observations with `lo <= t <= hi`.
    pub fn select(&self, lo: f64, hi: f64) -> Result<Self> {
        let (times, values): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(&t, _)| t >= lo && t <= hi)
            .map(|(&t, &x)| (t, x))
            .unzip();
        Self::new(times, values, self.label.clone())
    }

    /// Every `k`-th observation starting with the first.
    pub fn every_nth(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("subsampling stride must be positive".into()));
        }
        let (times, values) = self
            .times
            .iter()
            .zip(&self.values)
            .step_by(k)
            .map(|(&t, &x)| (t, x))
            .unzip();
        Self::new(times, values, self.label.clone())
    }

    /// Same times, values multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.times.clone(),
            self.values.iter().map(|x| x * c).collect(),
            self.label.clone(),
        )
    }

    /// Latest observation with time strictly before `t`.
    pub fn latest_before(&self, t: f64) -> Option<(f64, f64)> {
        let idx = self.times.partition_point(|&s| s < t);
        (idx > 0).then(|| (self.times[idx - 1], self.values[idx - 1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_are_uniform() {
        let s = TimeSeries::new(vec![1.0, 2.0], vec![1.0, 2.0], "x").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.uniform_step(), Some(1.0));
    }

    #[test]
    fn rejects_invalid_series() {
        assert!(TimeSeries::new(vec![1.0], vec![1.0], "").is_err());
        assert!(TimeSeries::new(vec![1.0, 1.0], vec![1.0, 2.0], "").is_err());
        assert!(TimeSeries::new(vec![1.0, 2.0], vec![1.0, -2.0], "").is_err());
        assert!(TimeSeries::new(vec![0.0, 2.0], vec![1.0, 2.0], "").is_err());
        assert!(matches!(
            TimeSeries::new(vec![1.0, 2.0], vec![1.0], ""),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn detects_irregular_spacing() {
        let s = TimeSeries::new(vec![1.0, 2.0, 3.5], vec![1.0, 2.0, 3.0], "").unwrap();
        assert!(!s.is_uniform());
        let grid: Vec<f64> = (0..500).map(|k| 1990.0 + k as f64 * 0.066).collect();
        let s = TimeSeries::new(grid, vec![1.0; 500], "").unwrap();
        assert!(s.is_uniform());
    }

    #[test]
    fn anchors_and_selection() {
        let s = TimeSeries::new(vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0], "").unwrap();
        assert_eq!(s.latest_before(1.0), None);
        assert_eq!(s.latest_before(3.0), Some((2.0, 6.0)));
        assert_eq!(s.latest_before(9.0), Some((4.0, 8.0)));
        let sub = s.select(2.0, 3.0).unwrap();
        assert_eq!(sub.times(), &[2.0, 3.0]);
        assert!(s.select(2.5, 2.9).is_err());
        assert_eq!(s.every_nth(2).unwrap().times(), &[1.0, 3.0]);
    }
}
