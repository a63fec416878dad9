//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use sinelike::{dataset, TimeSeries};

pub const LAMBDA_HAT: f64 = -0.038_280_96;
pub const SIGMA_HAT: f64 = 0.067_306_2;
pub const X1990: f64 = 11.858_15;
pub const X2021: f64 = 37.353_39;

pub fn train() -> TimeSeries {
    dataset::us_natgas().select(1990.0, 2021.0).unwrap()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature over `[a, b]`, pre-split into `panels` pieces.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 30)
        })
        .sum()
}

/// `int_0^inf g(y) dy` through `y = e^w` on `w` in `centre +/- half_width`.
pub fn integrate_positive(g: impl Fn(f64) -> f64, centre: f64, half_width: f64) -> f64 {
    integrate(|w| {
        let y = w.exp();
        g(y) * y
    }, centre - half_width, centre + half_width, 2000, 1e-12)
}

pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Richardson-extrapolated central difference (fourth order).
pub fn richardson_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d1 = central_diff(&f, x, h);
    let d2 = central_diff(&f, x, h / 2.0);
    (4.0 * d2 - d1) / 3.0
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Critical value of the two-sample KS statistic at the 1% level.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    let c = (-(0.005f64).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Anderson-Darling statistic of `z` against the standard normal.
pub fn anderson_darling_normal(z: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let nd = Normal::new(0.0, 1.0).unwrap();
    let mut z = z.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len();
    let s: f64 = (0..n)
        .map(|i| {
            let lo = nd.cdf(z[i]).ln();
            let hi = (1.0 - nd.cdf(z[n - 1 - i])).ln();
            (2 * i + 1) as f64 * (lo + hi)
        })
        .sum();
    -(n as f64) - s / n as f64
}

/// 1% critical value of A^2 for a fully specified distribution.
pub const AD_CRITICAL_1PCT: f64 = 3.857;

/// Two-pass root-mean-square of differences, independent of the library path.
pub fn two_pass_rmse(a: &[f64], b: &[f64]) -> f64 {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let scale = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = diffs.iter().map(|d| (d / scale).powi(2)).sum();
    scale * (s / n).sqrt()
}

pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}
