//! Sine-Like (SL) lognormal diffusion process.
//!
//! The process solves
//!
//! ```text
//! dX(t) = A(t) X(t) dt + sigma X(t) dW(t),   t in [t1, T], t1 > 0
//! ```
//!
//! with a time-dependent log-mean rate `A(t)` involving `sin((pi/2) exp(-lambda/t))`.
//! It has a closed-form lognormal transition density, so the crate provides exact
//! path simulation, maximum-likelihood fitting through a one-dimensional profile
//! likelihood, trend forecasts with confidence bands, accuracy metrics, and an AIC
//! comparison against a homogeneous Gompertz diffusion.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod estimation;
pub mod gompertz;
pub mod metrics;
pub mod model;
pub mod normal;
pub mod series;
pub mod simulate;
mod root;
mod sum;

pub use error::{Error, Result};
pub use estimation::{
    aic, estimated_trends, fit_sl, h_terms, lambda_score, log_likelihood, sigma2_profile,
    FitReport, ForecastRow, SearchConfig, SpacingMode, TransitionTerm,
};
pub use gompertz::{fit_gompertz, GompertzFit, GompertzParams, GompertzSearch};
pub use metrics::{accuracy, AccuracyClass, AccuracyReport};
pub use model::{
    conditional_mean, confidence_bounds, drift_coefficient, log_mean_increment, mean_function,
    phase, transition_logpdf, variance_function, ConfidenceBand, SlParams, TimeWindow,
};
pub use series::TimeSeries;
pub use simulate::{
    ensemble_mean, recovery_experiment, sample_path, PathEnsemble, RecoveryDesign, RecoveryTable,
    SimulationSpec,
};
