//! Maximum-likelihood fitting of the SL process from one discretely sampled path.
//!
//! For fixed `lambda` the log-likelihood is maximised in `sigma^2` in closed form,
//! so fitting reduces to a one-dimensional root search of the profile score.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{self, SlParams, TimeWindow};
use crate::root;
use crate::series::TimeSeries;
use crate::sum::{neumaier, Accumulator};

/// Number of SL parameters counted by AIC.
pub const SL_PARAMETER_COUNT: usize = 2;

const RESIDUAL_EPS: f64 = 1e-300;

/// Per-transition quantities `H_{lambda,j}` and `dH_{lambda,j}/dlambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionTerm {
    pub j: usize,
    /// Step `t_{j+1} - t_j`.
    pub h: f64,
    pub h_lambda: f64,
    pub dh_dlambda: f64,
}

pub fn h_terms(lambda: f64, series: &TimeSeries) -> Result<Vec<TransitionTerm>> {
    let t = series.times();
    let x = series.values();
    let ln_sin: Vec<f64> = t
        .iter()
        .map(|&ti| model::ln_sin_phase(lambda, ti))
        .collect::<Result<_>>()?;
    let dln_sin: Vec<f64> = t
        .iter()
        .map(|&ti| model::d_ln_sin_d_lambda(lambda, ti))
        .collect::<Result<_>>()?;
    Ok((0..t.len() - 1)
        .map(|j| {
            let h = t[j + 1] - t[j];
            let h_lambda = (x[j + 1] / x[j]).ln() - 2.0 * (t[j + 1] / t[j]).ln() + lambda * h
                - (ln_sin[j + 1] - ln_sin[j]);
            let dh_dlambda = h - (dln_sin[j + 1] - dln_sin[j]);
            TransitionTerm { j, h, h_lambda, dh_dlambda }
        })
        .collect())
}

fn sum_ln_next(series: &TimeSeries) -> f64 {
    neumaier(series.values()[1..].iter().map(|x| x.ln()))
}

fn loglik_from_terms(terms: &[TransitionTerm], ln_next: f64, sigma2: f64) -> f64 {
    let mut acc = Accumulator::default();
    for term in terms {
        let var = sigma2 * term.h;
        let r = term.h_lambda + 0.5 * var;
        acc.add(-0.5 * (2.0 * PI * var).ln() - r * r / (2.0 * var));
    }
    acc.value() - ln_next
}

/// Log-likelihood of the transitions, `sum_j ln f(x_{j+1}, t_{j+1} | x_j, t_j)`,
/// with each transition using its own step `h_j`.
pub fn log_likelihood(params: &SlParams, series: &TimeSeries) -> Result<f64> {
    let terms = h_terms(params.lambda(), series)?;
    Ok(loglik_from_terms(&terms, sum_ln_next(series), params.sigma2()))
}

fn mean_sq(terms: &[TransitionTerm]) -> f64 {
    neumaier(terms.iter().map(|t| t.h_lambda * t.h_lambda)) / terms.len() as f64
}

/// Closed-form profile variance `sigma^2(lambda)` for a uniformly spaced series:
/// `(2/h) (sqrt(1 + mean(H^2)) - 1)`.
pub fn sigma2_profile(lambda: f64, series: &TimeSeries) -> Result<f64> {
    let h = series.uniform_step().ok_or_else(|| {
        Error::Spacing("closed-form sigma^2 profile needs uniformly spaced times".into())
    })?;
    let terms = h_terms(lambda, series)?;
    let m2 = mean_sq(&terms);
    // sqrt(1 + m2) - 1 rationalised to avoid cancellation
    let v = 2.0 / h * m2 / (1.0 + (1.0 + m2).sqrt());
    Ok(v)
}

/// Profile variance for arbitrary spacing: the positive root of
/// `v^2 sum(h) + 4 m v - 4 sum(H^2/h) = 0`. Equals [`sigma2_profile`] on a uniform grid.
pub fn sigma2_profile_general(lambda: f64, series: &TimeSeries) -> Result<f64> {
    let terms = h_terms(lambda, series)?;
    Ok(profile_from_terms(&terms))
}

fn profile_from_terms(terms: &[TransitionTerm]) -> f64 {
    let m = terms.len() as f64;
    let total = neumaier(terms.iter().map(|t| t.h));
    let q = neumaier(terms.iter().map(|t| t.h_lambda * t.h_lambda / t.h));
    2.0 * q / (m + (m * m + total * q).sqrt())
}

/// Per-step standard deviations below this are treated as zero; on a noise-free
/// path the H terms then only carry the root-finding error in lambda.
const DEGENERATE_SD: f64 = 1e-8;

fn nondegenerate(v: f64, lambda: f64, terms: &[TransitionTerm]) -> Result<f64> {
    let mean_h = neumaier(terms.iter().map(|t| t.h)) / terms.len() as f64;
    if v.is_finite() && (v * mean_h).sqrt() > DEGENERATE_SD {
        Ok(v)
    } else {
        Err(Error::Degenerate(format!(
            "profile sigma^2 = {v} at lambda = {lambda}; all H terms vanish"
        )))
    }
}

/// Profile log-likelihood `l(lambda, sigma^2(lambda))`.
pub fn profile_log_likelihood(lambda: f64, series: &TimeSeries) -> Result<f64> {
    let terms = h_terms(lambda, series)?;
    let v = nondegenerate(profile_from_terms(&terms), lambda, &terms)?;
    Ok(loglik_from_terms(&terms, sum_ln_next(series), v))
}

/// Returns `(score, scale)` where `score = dl/dlambda` at `(lambda, v)` and
/// `scale` is the sum of the absolute summands.
fn lambda_partial(terms: &[TransitionTerm], v: f64) -> (f64, f64) {
    let mut score = Accumulator::default();
    let mut scale = Accumulator::default();
    for t in terms {
        let s = (t.h_lambda + 0.5 * v * t.h) * t.dh_dlambda / (v * t.h);
        score.add(-s);
        scale.add(s.abs());
    }
    (score.value(), scale.value())
}

/// Profile score in `lambda`: the partial derivative `dl/dlambda` evaluated at
/// `(lambda, sigma^2(lambda))`. By the envelope property this is also the total
/// derivative of [`profile_log_likelihood`]; its root is the ML estimate.
pub fn lambda_score(lambda: f64, series: &TimeSeries) -> Result<f64> {
    let terms = h_terms(lambda, series)?;
    let v = nondegenerate(profile_from_terms(&terms), lambda, &terms)?;
    Ok(lambda_partial(&terms, v).0)
}

/// Left side of the uniform-grid estimating equation
/// `sum_j (H_j + sigma^2(lambda) h / 2) dH_j/dlambda`, which shares its roots
/// with [`lambda_score`].
pub fn lambda_estimating_equation(lambda: f64, series: &TimeSeries) -> Result<f64> {
    let v = sigma2_profile(lambda, series)?;
    let terms = h_terms(lambda, series)?;
    Ok(neumaier(
        terms.iter().map(|t| (t.h_lambda + 0.5 * v * t.h) * t.dh_dlambda),
    ))
}

/// Full score `(dl/dlambda, dl/dsigma^2)` at arbitrary parameters.
pub fn score(params: &SlParams, series: &TimeSeries) -> Result<(f64, f64)> {
    let terms = h_terms(params.lambda(), series)?;
    let v = params.sigma2();
    let (dl, _) = lambda_partial(&terms, v);
    let m = terms.len() as f64;
    let q = neumaier(terms.iter().map(|t| t.h_lambda * t.h_lambda / t.h));
    let total = neumaier(terms.iter().map(|t| t.h));
    let dv = -m / (2.0 * v) + q / (2.0 * v * v) - total / 8.0;
    Ok((dl, dv))
}

/// Akaike information criterion `2k - 2 l`.
pub fn aic(log_likelihood: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * log_likelihood
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingMode {
    Uniform,
    General,
}

/// Search settings for [`fit_sl`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub bracket: (f64, f64),
    pub tol: f64,
    pub grid_points: usize,
    pub max_iter: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            bracket: (-5.0, 5.0),
            tol: 1e-10,
            grid_points: 200,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    /// Bracket after intersection with the domain-feasible set.
    pub bracket: (f64, f64),
    pub grid_points: usize,
    pub sign_changes: usize,
    pub iterations: usize,
    pub score_residual: f64,
    /// `|score| / (sum of |summands| + eps)`.
    pub scaled_residual: f64,
    pub converged: bool,
    pub grid_argmax_lambda: f64,
    /// Polished root is at least as good as every grid point.
    pub global_on_grid: bool,
}

/// Numerical-Hessian standard errors (not part of the classic estimator output).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub lambda: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: SlParams,
    pub sigma2: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub n_observations: usize,
    pub n_transitions: usize,
    pub t1: f64,
    pub x1: f64,
    pub spacing_mode: SpacingMode,
    pub step: Option<f64>,
    pub solver: SolverDiagnostics,
    pub standard_errors: Option<StandardErrors>,
}

impl FitReport {
    pub fn lambda(&self) -> f64 {
        self.params.lambda()
    }

    pub fn sigma(&self) -> f64 {
        self.params.sigma()
    }
}

/// Fits `(lambda, sigma)` by maximising the profile likelihood.
///
/// A coarse grid of the profile score over the feasible bracket locates every
/// downward sign change (local maxima of the profile); each is polished with
/// Brent's method and the one with the largest profile likelihood wins.
pub fn fit_sl(series: &TimeSeries, search: &SearchConfig) -> Result<FitReport> {
    let (lo, hi) = search.bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!("invalid bracket ({lo}, {hi})")));
    }
    if !(search.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", search.tol)));
    }
    if search.grid_points < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 points".into()));
    }
    let window = TimeWindow::new(series.first().0, series.last().0)?;
    let (lo, hi) = window.feasible_lambda(lo, hi);
    if !(lo < hi) {
        return Err(Error::Domain(format!(
            "bracket has no domain-feasible lambda for times starting at {}",
            window.t1()
        )));
    }

    let n = search.grid_points;
    let grid: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    // Degenerate grid points (all H = 0) are skipped; they cannot be maxima.
    let evals: Vec<Option<(f64, f64)>> = grid
        .iter()
        .map(|&l| -> Result<Option<(f64, f64)>> {
            match (lambda_score(l, series), profile_log_likelihood(l, series)) {
                (Ok(s), Ok(p)) => Ok(Some((s, p))),
                (Err(Error::Degenerate(_)), _) | (_, Err(Error::Degenerate(_))) => Ok(None),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let (grid_argmax, grid_max) = grid
        .iter()
        .zip(&evals)
        .filter_map(|(&l, e)| e.map(|(_, p)| (l, p)))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, (l, p)| {
            if p > best.1 {
                (l, p)
            } else {
                best
            }
        });

    let score_fn = |l: f64| lambda_score(l, series);
    let mut candidates = Vec::new();
    for i in 0..n - 1 {
        let (Some((s0, _)), Some((s1, _))) = (evals[i], evals[i + 1]) else {
            continue;
        };
        if s0 > 0.0 && s1 <= 0.0 {
            let r = root::brent(score_fn, grid[i], grid[i + 1], search.tol, search.max_iter)?;
            candidates.push(r);
        }
    }
    let sign_changes = candidates.len();
    let mut best: Option<(root::Root, f64)> = None;
    for r in candidates {
        let p = profile_log_likelihood(r.x, series)?;
        if best.as_ref().map_or(true, |(_, bp)| p > *bp) {
            best = Some((r, p));
        }
    }
    let (root, profile) = best.ok_or(Error::NoRoot { lo, hi })?;

    let lambda = root.x;
    let terms = h_terms(lambda, series)?;
    let sigma2 = nondegenerate(profile_from_terms(&terms), lambda, &terms)?;
    let (residual, scale) = lambda_partial(&terms, sigma2);
    let params = SlParams::new(lambda, sigma2.sqrt())?;
    let log_likelihood = loglik_from_terms(&terms, sum_ln_next(series), sigma2);
    let (t1, x1) = series.first();
    let step = series.uniform_step();

    Ok(FitReport {
        params,
        sigma2,
        log_likelihood,
        aic: aic(log_likelihood, SL_PARAMETER_COUNT),
        n_observations: series.len(),
        n_transitions: series.len() - 1,
        t1,
        x1,
        spacing_mode: if step.is_some() { SpacingMode::Uniform } else { SpacingMode::General },
        step,
        solver: SolverDiagnostics {
            bracket: (lo, hi),
            grid_points: n,
            sign_changes,
            iterations: root.iterations,
            score_residual: residual,
            scaled_residual: residual.abs() / (scale + RESIDUAL_EPS),
            converged: root.converged,
            grid_argmax_lambda: grid_argmax,
            global_on_grid: profile >= grid_max - 1e-9 * grid_max.abs().max(1.0),
        },
        standard_errors: standard_errors(&params, series).ok(),
    })
}

/// Standard errors from the inverse of the negative numerical Hessian of
/// `l(lambda, sigma)`, using centred second differences.
pub fn standard_errors(params: &SlParams, series: &TimeSeries) -> Result<StandardErrors> {
    let terms_at = |l: f64| h_terms(l, series);
    let ln_next = sum_ln_next(series);
    let f = |l: f64, s: f64| -> Result<f64> { Ok(loglik_from_terms(&terms_at(l)?, ln_next, s * s)) };
    let (l0, s0) = (params.lambda(), params.sigma());
    let dl = 1e-4 * l0.abs().max(1e-2);
    let ds = 1e-4 * s0;
    let f00 = f(l0, s0)?;
    let hll = (f(l0 + dl, s0)? - 2.0 * f00 + f(l0 - dl, s0)?) / (dl * dl);
    let hss = (f(l0, s0 + ds)? - 2.0 * f00 + f(l0, s0 - ds)?) / (ds * ds);
    let hls = (f(l0 + dl, s0 + ds)? - f(l0 + dl, s0 - ds)? - f(l0 - dl, s0 + ds)?
        + f(l0 - dl, s0 - ds)?)
        / (4.0 * dl * ds);
    // information = -H
    let (a, b, d) = (-hll, -hls, -hss);
    let det = a * d - b * b;
    if !(det > 0.0 && a > 0.0) {
        return Err(Error::NoConvergence {
            iterations: 0,
            reason: "observed information is not positive definite".into(),
        });
    }
    Ok(StandardErrors {
        lambda: (d / det).sqrt(),
        sigma: (a / det).sqrt(),
    })
}

/// Point forecasts and confidence bounds at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub t: f64,
    /// Estimated mean function, anchored at the first observation.
    pub emf: f64,
    /// Estimated conditional mean, anchored at `(anchor_t, anchor_x)`.
    pub ecmf: f64,
    pub lower: f64,
    pub upper: f64,
    pub anchor_t: f64,
    pub anchor_x: f64,
}

/// Plug-in trend forecasts at each horizon time.
///
/// The EMF starts from the first observation of `series`. The ECMF is anchored at
/// the latest observation of `series` strictly before `t` (the first observation
/// when `t` equals it), so passing observations beyond the training range yields
/// one-step-ahead conditional forecasts.
pub fn estimated_trends(
    report: &FitReport,
    series: &TimeSeries,
    horizon: &[f64],
    level: f64,
) -> Result<Vec<ForecastRow>> {
    let params = &report.params;
    let (t1, x1) = series.first();
    horizon
        .iter()
        .map(|&t| {
            if !(t >= t1) {
                return Err(Error::InvalidInput(format!(
                    "horizon time {t} precedes the first observation {t1}"
                )));
            }
            let emf = model::mean_function(params, t1, x1, t)?;
            let (anchor_t, anchor_x) = series.latest_before(t).unwrap_or((t1, x1));
            let ecmf = model::conditional_mean(params, anchor_t, t, anchor_x)?;
            let (lower, upper) = model::confidence_bounds(params, t1, x1, t, level)?;
            Ok(ForecastRow { t, emf, ecmf, lower, upper, anchor_t, anchor_x })
        })
        .collect()
}
