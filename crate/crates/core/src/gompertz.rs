//! Homogeneous Gompertz lognormal diffusion used as the comparison model:
//!
//! ```text
//! dX = (lambda - beta ln X) X dt + sigma X dW
//! ```
//!
//! `ln X` is a Gaussian Ornstein-Uhlenbeck process, so transitions are exactly
//! lognormal and on a uniform grid `ln x_{j+1}` on `ln x_j` is an AR(1) regression.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::estimation::aic;
use crate::root;
use crate::series::TimeSeries;
use crate::sum::{neumaier, Accumulator};

pub const GOMPERTZ_PARAMETER_COUNT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GompertzParams {
    lambda: f64,
    beta: f64,
    sigma: f64,
}

impl GompertzParams {
    pub fn new(lambda: f64, beta: f64, sigma: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("lambda must be finite, got {lambda}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { lambda, beta, sigma })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Mean and variance of `ln X(s + dt)` given `ln X(s) = ln_xs`.
pub fn log_transition_moments(p: &GompertzParams, ln_xs: f64, dt: f64) -> (f64, f64) {
    moments(p.lambda, p.beta, p.sigma, ln_xs, dt)
}

/// `(1 - e^{-b dt}) / b`, continued through `b = 0`.
fn decay_over_rate(b: f64, dt: f64) -> f64 {
    if (b * dt).abs() < 1e-12 {
        dt * (1.0 - 0.5 * b * dt)
    } else {
        -(-b * dt).exp_m1() / b
    }
}

/// Moments for any real `beta`, so curvature can be taken at the `beta = 0` boundary.
fn moments(lambda: f64, beta: f64, sigma: f64, ln_xs: f64, dt: f64) -> (f64, f64) {
    let g = decay_over_rate(beta, dt);
    let mean = (1.0 - beta * g) * ln_xs + (lambda - 0.5 * sigma * sigma) * g;
    (mean, sigma * sigma * decay_over_rate(2.0 * beta, dt))
}

pub fn gompertz_transition_logpdf(p: &GompertzParams, s: f64, t: f64, x_s: f64, y: f64) -> Result<f64> {
    if !(t > s) {
        return Err(Error::InvalidInput(format!("requires s < t, got s={s}, t={t}")));
    }
    if !(x_s > 0.0 && y > 0.0 && x_s.is_finite() && y.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "states must be positive, got x_s={x_s}, y={y}"
        )));
    }
    let (mean, var) = log_transition_moments(p, x_s.ln(), t - s);
    let ly = y.ln();
    Ok(-ly - 0.5 * (2.0 * PI * var).ln() - (ly - mean).powi(2) / (2.0 * var))
}

pub fn log_likelihood(p: &GompertzParams, series: &TimeSeries) -> f64 {
    raw_log_likelihood([p.lambda, p.beta, p.sigma], series)
}

fn raw_log_likelihood(x: [f64; 3], series: &TimeSeries) -> f64 {
    let t = series.times();
    let lx: Vec<f64> = series.values().iter().map(|x| x.ln()).collect();
    let mut acc = Accumulator::default();
    for j in 0..t.len() - 1 {
        let (mean, var) = moments(x[0], x[1], x[2], lx[j], t[j + 1] - t[j]);
        let r = lx[j + 1] - mean;
        acc.add(-0.5 * (2.0 * PI * var).ln() - r * r / (2.0 * var) - lx[j + 1]);
    }
    acc.value()
}

/// Ordinary least squares of `ln x_{j+1}` on `ln x_j` with free intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Regression {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares divided by the number of transitions (ML variance).
    pub residual_variance: f64,
}

pub fn ar1_regression(series: &TimeSeries) -> Ar1Regression {
    let lx: Vec<f64> = series.values().iter().map(|x| x.ln()).collect();
    let a = &lx[..lx.len() - 1];
    let b = &lx[1..];
    let m = a.len() as f64;
    let ma = neumaier(a.iter().copied()) / m;
    let mb = neumaier(b.iter().copied()) / m;
    let sab = neumaier(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)));
    let saa = neumaier(a.iter().map(|x| (x - ma) * (x - ma)));
    let slope = sab / saa;
    let intercept = mb - slope * ma;
    let rss = neumaier(a.iter().zip(b).map(|(x, y)| (y - intercept - slope * x).powi(2)));
    Ar1Regression {
        slope,
        intercept,
        residual_variance: rss / m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GompertzSearch {
    pub beta_bounds: (f64, f64),
    pub tol: f64,
    pub max_rounds: usize,
}

impl Default for GompertzSearch {
    fn default() -> Self {
        Self {
            beta_bounds: (1e-8, 10.0),
            tol: 1e-10,
            max_rounds: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GompertzStandardErrors {
    pub lambda: f64,
    pub beta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GompertzFit {
    pub params: GompertzParams,
    pub log_likelihood: f64,
    pub aic: f64,
    pub n_transitions: usize,
    pub ar1: Ar1Regression,
    pub rounds: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub standard_errors: Option<GompertzStandardErrors>,
}

/// Maps the AR(1) coefficients on step `h` back to `(lambda, beta, sigma)`.
fn from_ar1(reg: &Ar1Regression, h: f64, bounds: (f64, f64)) -> (f64, f64, f64, bool) {
    let raw_beta = -reg.slope.ln() / h;
    let clipped = !(raw_beta > bounds.0 && raw_beta < bounds.1);
    let beta = if raw_beta.is_finite() {
        raw_beta.clamp(bounds.0, bounds.1)
    } else {
        bounds.0
    };
    let decay = -(-beta * h).exp_m1();
    let decay2 = -(-2.0 * beta * h).exp_m1();
    let sigma2 = reg.residual_variance * 2.0 * beta / decay2;
    let lambda = reg.intercept * beta / decay + 0.5 * sigma2;
    (lambda, beta, sigma2.sqrt(), clipped)
}

/// ML fit of the Gompertz diffusion.
///
/// The AR(1) regression gives the exact MLE on a uniform grid when the slope lies
/// in `(0, 1)`; coordinate ascent on `(lambda, ln beta, ln sigma)` then polishes
/// the estimate (and does all the work for irregular spacing).
pub fn fit_gompertz(series: &TimeSeries, search: &GompertzSearch) -> Result<GompertzFit> {
    let (blo, bhi) = search.beta_bounds;
    if !(blo > 0.0 && bhi > blo) {
        return Err(Error::InvalidInput(format!("invalid beta bounds ({blo}, {bhi})")));
    }
    if series.len() < 4 {
        return Err(Error::InvalidInput(
            "Gompertz fit needs at least 4 observations for 3 parameters".into(),
        ));
    }
    let reg = ar1_regression(series);
    let h = series
        .uniform_step()
        .unwrap_or_else(|| (series.last().0 - series.first().0) / (series.len() - 1) as f64);
    let (lambda0, beta0, sigma0, clipped) = from_ar1(&reg, h, search.beta_bounds);
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::Degenerate("zero residual variance in AR(1) regression".into()));
    }

    let (ln_blo, ln_bhi) = (blo.ln(), bhi.ln());
    let objective = |x: &[f64; 3]| -> f64 {
        match GompertzParams::new(x[0], x[1].exp(), x[2].exp()) {
            Ok(p) => log_likelihood(&p, series),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut x = [lambda0, beta0.ln(), sigma0.ln()];
    let mut fx = objective(&x);
    let mut width = [0.1 * lambda0.abs().max(0.1), 0.5, 0.5];
    let mut rounds = 0;
    let mut converged = false;
    while rounds < search.max_rounds {
        rounds += 1;
        let start = fx;
        for k in 0..3 {
            let (mut lo, mut hi) = (x[k] - width[k], x[k] + width[k]);
            if k == 1 {
                lo = lo.max(ln_blo);
                hi = hi.min(ln_bhi);
            }
            let (arg, val, _) = root::golden_max(
                |v| {
                    let mut y = x;
                    y[k] = v;
                    objective(&y)
                },
                lo,
                hi,
                1e-12 * width[k].max(1e-3),
                200,
            );
            if val > fx {
                x[k] = arg;
                fx = val;
            }
        }
        let gain = fx - start;
        if gain <= search.tol {
            if width.iter().all(|w| *w < 1e-9) {
                converged = true;
                break;
            }
            for w in &mut width {
                *w *= 0.25;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: rounds,
            reason: "Gompertz coordinate ascent did not settle".into(),
        });
    }

    let params = GompertzParams::new(x[0], x[1].exp(), x[2].exp())?;
    let mut warnings = Vec::new();
    let at_bound = (x[1] - ln_blo).abs() < 1e-6 || (ln_bhi - x[1]).abs() < 1e-6;
    if at_bound || clipped {
        warnings.push(format!(
            "beta estimate {} is at a search bound ({blo}, {bhi})",
            params.beta
        ));
    }
    let log_likelihood = log_likelihood(&params, series);
    Ok(GompertzFit {
        params,
        log_likelihood,
        aic: aic(log_likelihood, GOMPERTZ_PARAMETER_COUNT),
        n_transitions: series.len() - 1,
        ar1: reg,
        rounds,
        converged,
        warnings,
        standard_errors: standard_errors(&params, series),
    })
}

/// Standard errors from the inverse negative numerical Hessian in `(lambda, beta, sigma)`.
///
/// The likelihood is continued analytically to `beta <= 0`, so a fit on the lower
/// `beta` bound still gets curvature-based errors.
pub fn standard_errors(p: &GompertzParams, series: &TimeSeries) -> Option<GompertzStandardErrors> {
    let x0 = [p.lambda, p.beta, p.sigma];
    let steps = [
        1e-4 * p.lambda.abs().max(1e-2),
        1e-4 * p.beta.max(1e-2),
        1e-4 * p.sigma,
    ];
    let f = |x: [f64; 3]| -> f64 {
        if x[2] > 0.0 {
            raw_log_likelihood(x, series)
        } else {
            f64::NAN
        }
    };
    let shifted = |i: usize, di: f64, j: usize, dj: f64| {
        let mut x = x0;
        x[i] += di;
        x[j] += dj;
        f(x)
    };
    let f0 = f(x0);
    let mut info = [[0.0; 3]; 3];
    for i in 0..3 {
        let hi = steps[i];
        info[i][i] = -(shifted(i, hi, i, 0.0) - 2.0 * f0 + shifted(i, -hi, i, 0.0)) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let v = -(shifted(i, hi, j, hj) - shifted(i, hi, j, -hj) - shifted(i, -hi, j, hj)
                + shifted(i, -hi, j, -hj))
                / (4.0 * hi * hj);
            info[i][j] = v;
            info[j][i] = v;
        }
    }
    let cov = invert3(&info)?;
    let se: Vec<f64> = (0..3).map(|i| cov[i][i]).collect();
    if se.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Some(GompertzStandardErrors {
            lambda: se[0].sqrt(),
            beta: se[1].sqrt(),
            sigma: se[2].sqrt(),
        })
    } else {
        None
    }
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c = |r: usize, s: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (s1, s2) = ((s + 1) % 3, (s + 2) % 3);
        m[r1][s1] * m[r2][s2] - m[r1][s2] * m[r2][s1]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    if !(det.abs() > 0.0) || !det.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = c(j, i) / det;
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset;

    fn published() -> GompertzParams {
        GompertzParams::new(0.060_000_022, 0.006_881_754, 0.067_492_691).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(GompertzParams::new(0.1, 0.0, 0.1).is_err());
        assert!(GompertzParams::new(0.1, 0.1, -0.1).is_err());
        assert!(GompertzParams::new(f64::INFINITY, 0.1, 0.1).is_err());
    }

    #[test]
    fn short_step_degenerates_to_start() {
        let (m, v) = log_transition_moments(&published(), 2.5, 1e-12);
        assert!((m - 2.5).abs() < 1e-12);
        assert!(v < 1e-14);
    }

    #[test]
    fn small_beta_is_geometric_brownian_motion() {
        let p = GompertzParams::new(0.06, 1e-8, 0.07).unwrap();
        let (m, v) = log_transition_moments(&p, 2.0, 3.0);
        assert!((m - (2.0 + (0.06 - 0.5 * 0.07 * 0.07) * 3.0)).abs() < 1e-6);
        assert!((v - 0.07 * 0.07 * 3.0).abs() < 1e-6);
    }

    #[test]
    fn logpdf_rejects_non_positive_state() {
        assert!(gompertz_transition_logpdf(&published(), 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(gompertz_transition_logpdf(&published(), 0.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn conditional_median_tracks_observed_growth() {
        let p = published();
        let (m, _) = log_transition_moments(&p, 11.858_15f64.ln(), 31.0);
        let median = m.exp();
        assert!((median / 37.353_39 - 1.0).abs() < 0.10, "{median}");
    }

    #[test]
    fn fit_on_builtin_matches_published_table() {
        let s = dataset::us_natgas().select(1990.0, 2021.0).unwrap();
        let fit = fit_gompertz(&s, &GompertzSearch::default()).unwrap();
        assert!((fit.aic - 114.3477).abs() < 0.5, "{}", fit.aic);
        // numpy OLS oracle
        assert!((fit.params.beta() - 0.006_881_713_7).abs() < 1e-6);
        assert!(fit.warnings.is_empty());
        let slope = (-fit.params.beta()).exp();
        assert!((slope - fit.ar1.slope).abs() < 1e-6);
    }

    #[test]
    fn invert3_identity() {
        let m = [[2.0, 0.0, 0.0], [0.0, 4.0, 0.0], [0.0, 0.0, 0.5]];
        let inv = invert3(&m).unwrap();
        assert_eq!(inv[0][0], 0.5);
        assert_eq!(inv[1][1], 0.25);
        assert_eq!(inv[2][2], 2.0);
    }
}
