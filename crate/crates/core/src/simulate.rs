//! Exact path simulation by composing the closed-form solution over grid steps.
//!
//! Normals come from a ChaCha8 stream per path: the stream id is the path index
//! and step `k` consumes the `k`-th 64-bit word, so every `(seed, path, step)`
//! maps to the same variate regardless of scheduling or ensemble size.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit_sl, SearchConfig};
use crate::gompertz::{self, GompertzParams};
use crate::model::{self, SlParams, TimeWindow};
use crate::normal;
use crate::series::TimeSeries;
use crate::sum::Accumulator;

/// Per-path standard normal stream.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform variate in the open interval `(0, 1)` from the top 53 bits.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl Iterator for NormalStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(normal::quantile(self.next_uniform()))
    }
}

/// Simulation grid and parameters. `sigma = 0` is allowed here (deterministic path).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub lambda: f64,
    pub sigma: f64,
    pub t1: f64,
    pub x1: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn from_params(params: &SlParams, t1: f64, x1: f64, dt: f64, n_steps: usize, n_paths: usize, seed: u64) -> Self {
        Self {
            lambda: params.lambda(),
            sigma: params.sigma(),
            t1,
            x1,
            dt,
            n_steps,
            n_paths,
            seed,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t1 + self.n_steps as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda != 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be non-zero, got {}", self.lambda)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.x1.is_finite() && self.x1 > 0.0) {
            return Err(Error::InvalidInput(format!("x1 must be positive, got {}", self.x1)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_steps == 0 || self.n_paths == 0 {
            return Err(Error::InvalidInput("n_steps and n_paths must be at least 1".into()));
        }
        TimeWindow::new(self.t1, self.t_end())?.check(self.lambda)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.t1 + k as f64 * self.dt).collect()
    }

    /// Deterministic log increments `ln trend(t_k, t_{k+1}) - sigma^2 dt / 2`.
    fn log_drift_steps(&self, times: &[f64]) -> Result<Vec<f64>> {
        let half_var = 0.5 * self.sigma * self.sigma * self.dt;
        times
            .windows(2)
            .map(|w| Ok(model::ln_trend_factor(self.lambda, w[0], w[1])? - half_var))
            .collect()
    }
}

fn compose_path(x1: f64, drift: &[f64], vol: f64, noise: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut path = Vec::with_capacity(drift.len() + 1);
    let mut ln_x = Accumulator::default();
    ln_x.add(x1.ln());
    path.push(x1);
    for (d, z) in drift.iter().zip(noise) {
        ln_x.add(d + vol * z);
        path.push(ln_x.value().exp());
    }
    path
}

/// One exact trajectory on the spec's grid, starting at `x1`.
pub fn sample_path(spec: &SimulationSpec, path_index: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let drift = spec.log_drift_steps(&spec.times())?;
    Ok(compose_path(
        spec.x1,
        &drift,
        spec.sigma * spec.dt.sqrt(),
        NormalStream::new(spec.seed, path_index),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub spec: SimulationSpec,
    pub times: Vec<f64>,
    pub paths: Vec<Vec<f64>>,
    pub stream_ids: Vec<u64>,
}

impl PathEnsemble {
    /// Path `i` as a series, e.g. for re-ingestion or fitting.
    pub fn series(&self, i: usize) -> Result<TimeSeries> {
        TimeSeries::new(self.times.clone(), self.paths[i].clone(), format!("path-{i}"))
    }

    /// Values of every path at grid index `k`.
    pub fn cross_section(&self, k: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p[k]).collect()
    }
}

pub fn simulate_ensemble(spec: &SimulationSpec) -> Result<PathEnsemble> {
    spec.validate()?;
    let times = spec.times();
    let drift = spec.log_drift_steps(&times)?;
    let vol = spec.sigma * spec.dt.sqrt();
    let stream_ids: Vec<u64> = (0..spec.n_paths as u64).collect();
    let paths = stream_ids
        .par_iter()
        .map(|&i| compose_path(spec.x1, &drift, vol, NormalStream::new(spec.seed, i)))
        .collect();
    Ok(PathEnsemble {
        spec: *spec,
        times,
        paths,
        stream_ids,
    })
}

/// Cross-sectional moments at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMoment {
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Large-sample standard error of the sample variance, `sqrt((m4 - m2^2)/n)`.
    pub variance_std_error: f64,
}

pub fn moments(ensemble: &PathEnsemble) -> Vec<EnsembleMoment> {
    let n = ensemble.paths.len() as f64;
    (0..ensemble.times.len())
        .map(|k| {
            let xs = ensemble.cross_section(k);
            let mut acc = Accumulator::default();
            xs.iter().for_each(|&x| acc.add(x));
            let mean = acc.value() / n;
            let (mut m2, mut m4) = (Accumulator::default(), Accumulator::default());
            for &x in &xs {
                let d = (x - mean) * (x - mean);
                m2.add(d);
                m4.add(d * d);
            }
            let (m2, m4) = (m2.value() / n, m4.value() / n);
            let (variance, std_error, variance_std_error) = if xs.len() > 1 {
                let var = m2 * n / (n - 1.0);
                (var, (var / n).sqrt(), ((m4 - m2 * m2).max(0.0) / n).sqrt())
            } else {
                (0.0, 0.0, 0.0)
            };
            EnsembleMoment {
                t: ensemble.times[k],
                mean,
                std_error,
                variance,
                variance_std_error,
            }
        })
        .collect()
}

/// Pointwise ensemble mean and standard error across `n_paths` at each grid time.
pub fn ensemble_mean(spec: &SimulationSpec) -> Result<Vec<EnsembleMoment>> {
    Ok(moments(&simulate_ensemble(spec)?))
}

/// Exact Gompertz trajectory on a uniform grid, using the same normal streams.
pub fn sample_gompertz_path(
    params: &GompertzParams,
    t1: f64,
    x1: f64,
    dt: f64,
    n_steps: usize,
    seed: u64,
    path_index: u64,
) -> Result<TimeSeries> {
    if !(dt > 0.0 && x1 > 0.0 && t1 > 0.0) || n_steps == 0 {
        return Err(Error::InvalidInput("invalid Gompertz simulation grid".into()));
    }
    let mut noise = NormalStream::new(seed, path_index);
    let mut ln_x = x1.ln();
    let mut times = vec![t1];
    let mut values = vec![x1];
    for k in 1..=n_steps {
        let (m, v) = gompertz::log_transition_moments(params, ln_x, dt);
        ln_x = m + v.sqrt() * noise.next().unwrap_or_default();
        times.push(t1 + k as f64 * dt);
        values.push(ln_x.exp());
    }
    TimeSeries::new(times, values, format!("gompertz-{path_index}"))
}

/// Design of a parameter-recovery experiment; replicate `r` uses path stream `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryDesign {
    pub t1: f64,
    pub x1: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub n_replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub index: usize,
    pub lambda_hat: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub lambda_se: Option<f64>,
    pub sigma_se: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub sd: f64,
    pub rmse: f64,
    /// `sd / sqrt(n)`.
    pub std_error_of_mean: f64,
    pub n: usize,
}

impl ParamSummary {
    fn from_estimates(truth: f64, est: &[f64]) -> Self {
        let n = est.len() as f64;
        let mean = est.iter().sum::<f64>() / n;
        let sd = if est.len() > 1 {
            (est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let rmse = (est.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / n).sqrt();
        Self {
            truth,
            mean,
            bias: mean - truth,
            sd,
            rmse,
            std_error_of_mean: sd / n.sqrt(),
            n: est.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTable {
    pub design: RecoveryDesign,
    pub replicates: Vec<Replicate>,
    pub lambda: Option<ParamSummary>,
    pub sigma: Option<ParamSummary>,
    pub n_failed: usize,
}

/// Simulates and refits `n_replicates` paths. Failed fits are recorded per replicate.
pub fn recovery_experiment(true_params: &SlParams, design: &RecoveryDesign) -> Result<RecoveryTable> {
    recovery_experiment_with(true_params, design, &SearchConfig::default())
}

pub fn recovery_experiment_with(
    true_params: &SlParams,
    design: &RecoveryDesign,
    search: &SearchConfig,
) -> Result<RecoveryTable> {
    if design.n_replicates == 0 {
        return Err(Error::InvalidInput("at least one replicate is required".into()));
    }
    let spec = SimulationSpec::from_params(
        true_params,
        design.t1,
        design.x1,
        design.dt,
        design.n_steps,
        design.n_replicates,
        design.seed,
    );
    let ensemble = simulate_ensemble(&spec)?;
    let replicates: Vec<Replicate> = (0..design.n_replicates)
        .into_par_iter()
        .map(|i| {
            let fit = ensemble.series(i).and_then(|s| fit_sl(&s, search));
            match fit {
                Ok(r) => Replicate {
                    index: i,
                    lambda_hat: Some(r.lambda()),
                    sigma_hat: Some(r.sigma()),
                    lambda_se: r.standard_errors.map(|s| s.lambda),
                    sigma_se: r.standard_errors.map(|s| s.sigma),
                    error: None,
                },
                Err(e) => Replicate {
                    index: i,
                    lambda_hat: None,
                    sigma_hat: None,
                    lambda_se: None,
                    sigma_se: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let lambdas: Vec<f64> = replicates.iter().filter_map(|r| r.lambda_hat).collect();
    let sigmas: Vec<f64> = replicates.iter().filter_map(|r| r.sigma_hat).collect();
    let n_failed = replicates.len() - lambdas.len();
    Ok(RecoveryTable {
        design: *design,
        lambda: (!lambdas.is_empty()).then(|| ParamSummary::from_estimates(true_params.lambda(), &lambdas)),
        sigma: (!sigmas.is_empty()).then(|| ParamSummary::from_estimates(true_params.sigma(), &sigmas)),
        replicates,
        n_failed,
    })
}
