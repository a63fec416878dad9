//! Closed-form mathematics of the Sine-Like process.
//!
//! Everything here is a pure function of its arguments. The recurring quantity is
//! the phase `u(t) = (pi/2) exp(-lambda/t)`; all log-sine terms require
//! `u(t)` in `(0, pi)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::normal;

/// Sine values at or below this magnitude are treated as a pole.
pub const SIN_POLE_TOL: f64 = 1e-12;

/// Parameters `(lambda, sigma)` of the SL diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlParams {
    lambda: f64,
    sigma: f64,
}

impl SlParams {
    pub fn new(lambda: f64, sigma: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda == 0.0 {
            return Err(Error::InvalidInput(format!(
                "lambda must be a finite non-zero real, got {lambda}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sigma must be finite and positive, got {sigma}"
            )));
        }
        Ok(Self { lambda, sigma })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Working time interval `[t1, t_end]` with `0 < t1 < t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    t1: f64,
    t_end: f64,
}

impl TimeWindow {
    pub fn new(t1: f64, t_end: f64) -> Result<Self> {
        if !(t1.is_finite() && t_end.is_finite() && t1 > 0.0 && t_end > t1) {
            return Err(Error::InvalidInput(format!(
                "time window requires 0 < t1 < t_end, got [{t1}, {t_end}]"
            )));
        }
        Ok(Self { t1, t_end })
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Checks the domain guard for `lambda` over the whole window.
    ///
    /// The phase is monotone in `t`, so both endpoints bound it.
    pub fn check(&self, lambda: f64) -> Result<()> {
        sin_phase(lambda, self.t1)?;
        sin_phase(lambda, self.t_end)?;
        Ok(())
    }

    pub fn admits(&self, lambda: f64) -> bool {
        self.check(lambda).is_ok()
    }

    /// Open interval of `lambda` values admitted by the guard, intersected with
    /// `(lo, hi)`. For `lambda > 0` the phase stays below `pi/2`; for
    /// `lambda < 0` the binding constraint is `exp(-lambda/t1) < 2`.
    pub fn feasible_lambda(&self, lo: f64, hi: f64) -> (f64, f64) {
        // Small margin keeps sin(u) well clear of SIN_POLE_TOL.
        let floor = -self.t1 * std::f64::consts::LN_2 * (1.0 - 1e-9);
        (lo.max(floor), hi)
    }
}

/// Phase `u = (pi/2) exp(-lambda/t)`.
pub fn phase(lambda: f64, t: f64) -> Result<f64> {
    if !lambda.is_finite() || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "phase requires finite inputs, got lambda={lambda}, t={t}"
        )));
    }
    if t <= 0.0 {
        return Err(Error::InvalidInput(format!("time must be positive, got {t}")));
    }
    Ok(raw_phase(lambda, t))
}

#[inline]
fn raw_phase(lambda: f64, t: f64) -> f64 {
    FRAC_PI_2 * (-lambda / t).exp()
}

/// Whether the phase lies strictly inside `(0, pi)`.
pub fn phase_in_domain(lambda: f64, t: f64) -> bool {
    matches!(phase(lambda, t), Ok(u) if u > 0.0 && u < PI)
}

/// `sin(u(t))`, checked against the domain guard and the pole tolerance.
pub fn sin_phase(lambda: f64, t: f64) -> Result<f64> {
    let u = phase(lambda, t)?;
    let s = u.sin();
    if !(u > 0.0 && u < PI) || s <= SIN_POLE_TOL {
        return Err(Error::Domain(format!(
            "phase (pi/2)exp(-lambda/t) = {u} at lambda={lambda}, t={t} is outside (0, pi)"
        )));
    }
    Ok(s)
}

pub(crate) fn ln_sin_phase(lambda: f64, t: f64) -> Result<f64> {
    sin_phase(lambda, t).map(f64::ln)
}

/// `cot(u(t))` evaluated as `cos/sin` with the pole check.
pub(crate) fn cot_phase(lambda: f64, t: f64) -> Result<f64> {
    let s = sin_phase(lambda, t)?;
    Ok(raw_phase(lambda, t).cos() / s)
}

/// `d/dlambda ln sin(u(t)) = -(pi/(2t)) exp(-lambda/t) cot(u(t))`.
pub(crate) fn d_ln_sin_d_lambda(lambda: f64, t: f64) -> Result<f64> {
    Ok(-raw_phase(lambda, t) / t * cot_phase(lambda, t)?)
}

/// Log-mean growth rate `A(t) = d/dt ln m(t)`.
pub fn drift_rate(lambda: f64, t: f64) -> Result<f64> {
    let cot = cot_phase(lambda, t)?;
    Ok(2.0 / t - lambda + lambda * raw_phase(lambda, t) / (t * t) * cot)
}

/// Drift `a(t, x) = A(t) x`, with the cotangent sign taken from the log-mean
/// derivative of the closed-form solution.
pub fn drift_coefficient(params: &SlParams, t: f64, x: f64) -> Result<f64> {
    Ok(drift_rate(params.lambda, t)? * x)
}

/// Diffusion coefficient `sigma x`.
pub fn diffusion_coefficient(params: &SlParams, x: f64) -> f64 {
    params.sigma * x
}

/// `ln` of the deterministic trend factor `(t/s)^2 sin(u(t))/sin(u(s)) e^{-lambda(t-s)}`.
pub(crate) fn ln_trend_factor(lambda: f64, s: f64, t: f64) -> Result<f64> {
    if s == t {
        sin_phase(lambda, s)?;
        return Ok(0.0);
    }
    Ok(2.0 * (t / s).ln() - lambda * (t - s) + ln_sin_phase(lambda, t)? - ln_sin_phase(lambda, s)?)
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(s.is_finite() && t.is_finite() && s > 0.0) {
        return Err(Error::InvalidInput(format!(
            "times must be finite and positive, got s={s}, t={t}"
        )));
    }
    if t < s {
        return Err(Error::InvalidInput(format!("requires s <= t, got s={s}, t={t}")));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite and positive, got {x}")))
    }
}

/// Location parameter `mu(s, t, x_s)` of the lognormal transition law.
pub fn log_mean_increment(params: &SlParams, s: f64, t: f64, x_s: f64) -> Result<f64> {
    check_times(s, t)?;
    check_positive("x_s", x_s)?;
    Ok(x_s.ln() + ln_trend_factor(params.lambda, s, t)? - 0.5 * params.sigma2() * (t - s))
}

/// Log transition density `ln f(y, t | x_s, s)`.
pub fn transition_logpdf(params: &SlParams, s: f64, t: f64, x_s: f64, y: f64) -> Result<f64> {
    if !(t > s) {
        return Err(Error::InvalidInput(format!("requires s < t, got s={s}, t={t}")));
    }
    check_positive("y", y)?;
    let mu = log_mean_increment(params, s, t, x_s)?;
    let var = params.sigma2() * (t - s);
    let ly = y.ln();
    Ok(-ly - 0.5 * (2.0 * PI * var).ln() - (ly - mu).powi(2) / (2.0 * var))
}

/// Transition CDF `P(X(t) <= y | X(s) = x_s)`.
pub fn transition_cdf(params: &SlParams, s: f64, t: f64, x_s: f64, y: f64) -> Result<f64> {
    if !(t > s) {
        return Err(Error::InvalidInput(format!("requires s < t, got s={s}, t={t}")));
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    let mu = log_mean_increment(params, s, t, x_s)?;
    Ok(normal::cdf((y.ln() - mu) / (params.sigma * (t - s).sqrt())))
}

/// Conditional trend `E[X(t) | X(s) = x_s]`.
pub fn conditional_mean(params: &SlParams, s: f64, t: f64, x_s: f64) -> Result<f64> {
    check_times(s, t)?;
    check_positive("x_s", x_s)?;
    Ok(x_s * ln_trend_factor(params.lambda, s, t)?.exp())
}

/// Unconditional trend `E[X(t)]` given the degenerate initial law `X(t1) = x1`.
pub fn mean_function(params: &SlParams, t1: f64, x1: f64, t: f64) -> Result<f64> {
    conditional_mean(params, t1, t, x1)
}

/// `Var[X(t)] = m(t)^2 (exp(sigma^2 (t - t1)) - 1)`.
pub fn variance_function(params: &SlParams, t1: f64, x1: f64, t: f64) -> Result<f64> {
    let m = mean_function(params, t1, x1, t)?;
    Ok(m * m * (params.sigma2() * (t - t1)).exp_m1())
}

/// Lower and upper `level` confidence bounds for `X(t)` anchored at `(t1, x1)`.
pub fn confidence_bounds(
    params: &SlParams,
    t1: f64,
    x1: f64,
    t: f64,
    level: f64,
) -> Result<(f64, f64)> {
    let z = normal::two_sided_z(level)?;
    let centre = log_mean_increment(params, t1, t, x1)?;
    let half = z * params.sigma * (t - t1).sqrt();
    Ok(((centre - half).exp(), (centre + half).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Pointwise confidence band over a set of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub level: f64,
    pub rows: Vec<BandRow>,
}

impl ConfidenceBand {
    pub fn build(params: &SlParams, t1: f64, x1: f64, times: &[f64], level: f64) -> Result<Self> {
        let rows = times
            .iter()
            .map(|&t| {
                confidence_bounds(params, t1, x1, t, level).map(|(lower, upper)| BandRow {
                    t,
                    lower,
                    upper,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { level, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: f64 = -0.038_280_96;
    const SIGMA: f64 = 0.067_306_2;
    const X1990: f64 = 11.858_15;
    const X2021: f64 = 37.353_39;

    fn fitted() -> SlParams {
        SlParams::new(LAMBDA, SIGMA).unwrap()
    }

    #[test]
    fn params_reject_zero_lambda_and_bad_sigma() {
        assert!(SlParams::new(0.0, 0.1).is_err());
        assert!(SlParams::new(0.1, 0.0).is_err());
        assert!(SlParams::new(0.1, -1.0).is_err());
        assert!(SlParams::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn phase_limits() {
        assert_eq!(phase(0.0, 7.0).unwrap(), FRAC_PI_2);
        assert!((phase(1.0, 1e12).unwrap() - FRAC_PI_2).abs() < 1e-11);
        let u = phase(LAMBDA, 1990.0).unwrap();
        // mpmath reference
        assert!((u - 1.570_826_543_965_612).abs() < 1e-14);
        assert!(u > FRAC_PI_2 && u < PI);
        assert!(phase(f64::NAN, 1.0).is_err());
        assert!(phase(1.0, 0.0).is_err());
    }

    #[test]
    fn guard_fails_when_phase_reaches_pi() {
        // exp(-lambda/t) >= 2 at t = 1 once lambda <= -ln 2
        assert!(!phase_in_domain(-0.7, 1.0));
        assert!(phase_in_domain(-0.69, 1.0));
        assert!(matches!(sin_phase(-0.7, 1.0), Err(Error::Domain(_))));
        let w = TimeWindow::new(1.0, 5.0).unwrap();
        assert!(w.check(-0.7).is_err());
        assert!(w.check(3.0).is_ok());
        let (lo, _) = w.feasible_lambda(-5.0, 5.0);
        assert!(w.admits(lo) && lo > -0.7);
    }

    #[test]
    fn window_requires_ordered_positive_times() {
        assert!(TimeWindow::new(0.0, 1.0).is_err());
        assert!(TimeWindow::new(2.0, 2.0).is_err());
        assert!(TimeWindow::new(1990.0, 2021.0).is_ok());
    }

    #[test]
    fn drift_is_linear_in_state() {
        assert_eq!(drift_coefficient(&fitted(), 2000.0, 0.0).unwrap(), 0.0);
        let a = drift_coefficient(&fitted(), 2000.0, 1.0).unwrap();
        let b = drift_coefficient(&fitted(), 2000.0, 3.0).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-15);
    }

    #[test]
    fn drift_rate_closed_form_at_unit_time() {
        // mpmath: 2 - 0.5 + (0.5 pi / 2) e^{-0.5} cot((pi/2) e^{-0.5})
        let p = SlParams::new(0.5, 0.1).unwrap();
        let a = drift_coefficient(&p, 1.0, 1.0).unwrap();
        assert!((a - 1.838_690_356_223_157_5).abs() < 1e-13, "{a}");
    }

    #[test]
    fn drift_matches_log_mean_derivative() {
        let p = fitted();
        let lnm = |t: f64| mean_function(&p, 1990.0, X1990, t).unwrap().ln();
        let t = 2000.0;
        let h = 1e-3;
        let fd = (lnm(t + h) - lnm(t - h)) / (2.0 * h);
        let drift = drift_coefficient(&p, t, 20.0).unwrap();
        assert!((drift - 20.0 * fd).abs() <= 1e-6 * drift.abs());
    }

    #[test]
    fn log_mean_increment_identities() {
        let p = fitted();
        assert_eq!(log_mean_increment(&p, 5.0, 5.0, 3.0).unwrap(), 3.0f64.ln());
        let a = log_mean_increment(&p, 2021.0, 2022.0, X2021).unwrap();
        let b = log_mean_increment(&p, 2021.0, 2022.0, 2.0 * X2021).unwrap();
        assert!((b - a - std::f64::consts::LN_2).abs() < 1e-13);
        let m = (a + 0.5 * p.sigma2()).exp();
        assert!((m - 38.849_46).abs() < 5e-4, "{m}");
    }

    #[test]
    fn log_mean_increment_is_additive() {
        let p = fitted();
        let (s, r, t) = (1990.0, 2003.5, 2021.0);
        let (x, xp) = (11.0, 17.3);
        let whole = log_mean_increment(&p, s, t, x).unwrap() - x.ln();
        let left = log_mean_increment(&p, s, r, x).unwrap() - x.ln();
        let right = log_mean_increment(&p, r, t, xp).unwrap() - xp.ln();
        assert!((whole - left - right).abs() < 1e-12);
    }

    #[test]
    fn transition_density_mode_and_median() {
        let p = SlParams::new(-0.038, 0.067).unwrap();
        let (s, t, xs) = (1990.0, 1995.0, X1990);
        let mu = log_mean_increment(&p, s, t, xs).unwrap();
        let mode = (mu - p.sigma2() * (t - s)).exp();
        let at_mode = transition_logpdf(&p, s, t, xs, mode).unwrap();
        for f in [0.999, 0.9999, 1.0001, 1.001] {
            assert!(transition_logpdf(&p, s, t, xs, mode * f).unwrap() < at_mode);
        }
        let median = transition_cdf(&p, s, t, xs, mu.exp()).unwrap();
        assert!((median - 0.5).abs() < 1e-12);
    }

    #[test]
    fn transition_density_rejects_bad_inputs() {
        let p = fitted();
        assert!(matches!(
            transition_logpdf(&p, 1990.0, 1991.0, 1.0, 0.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(transition_logpdf(&p, 1991.0, 1991.0, 1.0, 1.0).is_err());
        let bad = SlParams::new(-0.7, 0.1).unwrap();
        assert!(matches!(
            transition_logpdf(&bad, 1.0, 2.0, 1.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn conditional_mean_reproduces_published_forecasts() {
        let p = fitted();
        assert_eq!(conditional_mean(&p, 2021.0, 2021.0, X2021).unwrap(), X2021);
        let c22 = conditional_mean(&p, 2021.0, 2022.0, X2021).unwrap();
        assert!((c22 - 38.849_46).abs() < 5e-4, "{c22}");
        let m22 = mean_function(&p, 1990.0, X1990, 2022.0).unwrap();
        let m23 = mean_function(&p, 1990.0, X1990, 2023.0).unwrap();
        assert!((m22 - 41.675_41).abs() < 5e-4, "{m22}");
        assert!((m23 - 43.344_56).abs() < 5e-4, "{m23}");
        assert_eq!(mean_function(&p, 1990.0, X1990, 1990.0).unwrap(), X1990);
    }

    #[test]
    fn conditional_mean_is_expectation_of_lognormal() {
        let p = fitted();
        for t in [1991.0, 2000.0, 2021.0] {
            let mu = log_mean_increment(&p, 1990.0, t, X1990).unwrap();
            let direct = (mu + 0.5 * p.sigma2() * (t - 1990.0)).exp();
            let cm = conditional_mean(&p, 1990.0, t, X1990).unwrap();
            assert!((direct - cm).abs() <= 1e-12 * cm);
        }
    }

    #[test]
    fn variance_basics() {
        let p = SlParams::new(-0.038, 0.0673).unwrap();
        assert_eq!(variance_function(&p, 1990.0, X1990, 1990.0).unwrap(), 0.0);
        // mpmath reference
        let v = variance_function(&p, 1990.0, X1990, 2021.0).unwrap();
        assert!((v - 237.860_508_225_164_86).abs() < 1e-9, "{v}");
        let mut prev = 0.0;
        for sigma in [0.01, 0.05, 0.1, 0.2] {
            let q = SlParams::new(-0.038, sigma).unwrap();
            let v = variance_function(&q, 1990.0, X1990, 2021.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn bounds_degenerate_at_origin_and_level_free_centre() {
        let p = fitted();
        assert_eq!(
            confidence_bounds(&p, 1990.0, X1990, 1990.0, 0.95).unwrap(),
            (X1990, X1990)
        );
        let centre = log_mean_increment(&p, 1990.0, 2010.0, X1990).unwrap().exp();
        for level in [0.5, 0.8, 0.95, 0.999] {
            let (lo, hi) = confidence_bounds(&p, 1990.0, X1990, 2010.0, level).unwrap();
            assert!(lo < hi);
            assert!(((lo * hi).sqrt() - centre).abs() < 1e-10 * centre);
        }
        assert!(confidence_bounds(&p, 1990.0, X1990, 2010.0, 1.0).is_err());
        assert!(confidence_bounds(&p, 1990.0, X1990, 2010.0, 0.0).is_err());
    }

    #[test]
    fn band_rows_follow_times() {
        let p = fitted();
        let times = [1990.0, 2000.0, 2010.0];
        let band = ConfidenceBand::build(&p, 1990.0, X1990, &times, 0.9).unwrap();
        assert_eq!(band.rows.len(), 3);
        assert_eq!(band.rows[0].lower, X1990);
        assert!(band.rows.iter().all(|r| r.lower <= r.upper));
    }
}
