mod common;

use common::*;
use sinelike::gompertz::{ar1_regression, gompertz_transition_logpdf, log_likelihood, log_transition_moments, standard_errors};
use sinelike::simulate::sample_gompertz_path;
use sinelike::{fit_gompertz, fit_sl, GompertzParams, GompertzSearch, SearchConfig};

fn table3() -> GompertzParams {
    GompertzParams::new(0.06, 0.00688, 0.0675).unwrap()
}

fn oracle_moments(l: f64, b: f64, s: f64, ln_x: f64, h: f64) -> (f64, f64) {
    let e = (-b * h).exp();
    (e * ln_x + (l - s * s / 2.0) / b * (1.0 - e), s * s * (1.0 - (-2.0 * b * h).exp()) / (2.0 * b))
}

#[test]
fn density_integrates_to_one() {
    let p = table3();
    let centre = X1990.ln();
    let mass = integrate_positive(|y| gompertz_transition_logpdf(&p, 1990.0, 1991.0, X1990, y).unwrap().exp(), centre, 2.0);
    assert!((mass - 1.0).abs() < 1e-6);
}

#[test]
fn likelihood_is_ar1_gaussian_minus_jacobian() {
    let s = train();
    let p = table3();
    let lx: Vec<f64> = s.values().iter().map(|x| x.ln()).collect();
    let mut ll = 0.0;
    for j in 0..lx.len() - 1 {
        let (m, v) = oracle_moments(0.06, 0.00688, 0.0675, lx[j], 1.0);
        ll += -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (lx[j + 1] - m).powi(2) / (2.0 * v) - lx[j + 1];
    }
    assert!((log_likelihood(&p, &s) - ll).abs() < 1e-10);
    let (m, v) = log_transition_moments(&p, lx[0], 1.0);
    let (om, ov) = oracle_moments(0.06, 0.00688, 0.0675, lx[0], 1.0);
    assert!((m - om).abs() < 1e-13 && (v / ov - 1.0).abs() < 1e-12);
}

#[test]
fn slope_matches_ols_and_aic_ordering() {
    let s = train();
    let lx: Vec<f64> = s.values().iter().map(|x| x.ln()).collect();
    let (x, y) = (&lx[..lx.len() - 1], &lx[1..]);
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((ar1_regression(&s).slope - slope).abs() < 1e-12);
    let fit = fit_gompertz(&s, &GompertzSearch::default()).unwrap();
    assert!(((-fit.params.beta()).exp() - slope).abs() < 1e-6);
    assert!((fit.aic - 114.3477).abs() < 0.5);
    assert!(fit_sl(&s, &SearchConfig::default()).unwrap().aic < fit.aic);
}

#[test]
fn conditional_median_sanity() {
    let b: f64 = 0.00688;
    let med = ((-31.0 * b).exp() * X1990.ln() + (0.06 - 0.0675f64.powi(2) / 2.0) / b * (1.0 - (-31.0 * b).exp())).exp();
    assert!((med / X2021 - 1.0).abs() < 0.1);
}

#[test]
fn small_beta_reduces_to_gbm() {
    let p = GompertzParams::new(0.05, 1e-8, 0.1).unwrap();
    let (m, v) = log_transition_moments(&p, 2.0, 3.0);
    assert!((m - (2.0 + (0.05 - 0.005) * 3.0)).abs() < 1e-6);
    assert!((v - 0.01 * 3.0).abs() < 1e-6);
}

#[test]
fn recovery_within_three_standard_errors() {
    let truth = GompertzParams::new(0.06, 0.007, 0.067).unwrap();
    let mut hits = 0;
    for seed in 0..100u64 {
        let s = sample_gompertz_path(&truth, 1990.0, X1990, 0.066, 500, seed, 0).unwrap();
        let fit = fit_gompertz(&s, &GompertzSearch::default()).unwrap();
        let p = fit.params;
        let ok = match standard_errors(&p, &s) {
            Some(se) => (p.lambda() - 0.06).abs() <= 3.0 * se.lambda
                && (p.beta() - 0.007).abs() <= 3.0 * se.beta
                && (p.sigma() - 0.067).abs() <= 3.0 * se.sigma,
            None => false,
        };
        hits += ok as usize;
    }
    assert!(hits >= 95, "{hits} of 100");
}
