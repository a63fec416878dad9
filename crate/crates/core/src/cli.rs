//! Command-line interface: argument parsing, orchestration and serialisation.
//!
//! Every subcommand produces an [`Output`] holding both renderings; the binary
//! prints one of them. Tabular output is comma-separated text with `#` comment
//! lines; structured output is one JSON document echoing the configuration.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::{self, reference, Source, US_NATGAS_ID};
use crate::error::{Error, Result};
use crate::estimation::{self, FitReport, ForecastRow, SearchConfig};
use crate::gompertz::{self, GompertzFit, GompertzSearch};
use crate::metrics::{self, AccuracyReport};
use crate::model::{self, SlParams};
use crate::series::TimeSeries;
use crate::simulate::{self, RecoveryDesign, SimulationSpec};

pub const TOOL_NAME: &str = "sinelike";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Tabular,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "sinelike", version, about = "Sine-Like diffusion: fit, forecast, compare, simulate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value = "tabular", global = true)]
    pub output: OutputFormat,

    /// Random seed for simulation subcommands.
    #[arg(long, default_value_t = 1, global = true)]
    pub seed: u64,

    /// Omit the timestamp from structured output.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit (lambda, sigma) by maximum likelihood.
    Fit(DataArgs),
    /// Fit, then forecast EMF/ECMF with confidence bounds.
    Forecast {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated forecast times.
        #[arg(long, value_delimiter = ',', required = true)]
        horizon: Vec<f64>,
    },
    /// Compare the SL fit with a Gompertz diffusion by AIC.
    Compare(DataArgs),
    /// Accuracy of the fitted mean function over the training range.
    Metrics(DataArgs),
    /// Simulate exact SL trajectories.
    Simulate(SimArgs),
    /// Parameter-recovery Monte Carlo experiment.
    Recover {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Builtin dataset id.
    #[arg(long, conflicts_with = "input")]
    pub builtin: Option<String>,
    /// CSV file with header `time,value`.
    #[arg(long)]
    pub input: Option<String>,
    /// Inclusive training range `lo:hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub train: Option<String>,
    /// Confidence level of the bands.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Lambda search bracket `lo:hi`.
    #[arg(long, default_value = "-5:5", allow_hyphen_values = true)]
    pub bracket: String,
    /// Root-finding tolerance in lambda.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Model time is `(t - time_shift) / time_scale`.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub time_shift: f64,
    #[arg(long, default_value_t = 1.0)]
    pub time_scale: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = -0.038_280_96, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.067_306_2)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1990.0)]
    pub t1: f64,
    #[arg(long, default_value_t = 11.858_15)]
    pub x1: f64,
    #[arg(long, default_value_t = 0.066)]
    pub dt: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 10)]
    pub paths: usize,
}

/// Time transform `t -> (t - shift) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeTransform {
    pub shift: f64,
    pub scale: f64,
}

impl TimeTransform {
    pub fn apply(&self, t: f64) -> f64 {
        (t - self.shift) / self.scale
    }

    fn is_identity(&self) -> bool {
        self.shift == 0.0 && self.scale == 1.0
    }
}

/// Data-driven subcommand settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub source: Source,
    pub train: Option<(f64, f64)>,
    pub level: f64,
    pub search: SearchConfig,
    pub time: TimeTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Task {
    Fit(DataConfig),
    Forecast { data: DataConfig, horizon: Vec<f64> },
    Compare(DataConfig),
    Metrics(DataConfig),
    Simulate(SimulationSpec),
    Recover { spec: SimulationSpec, design: RecoveryDesign },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Fit(_) => "fit",
            Task::Forecast { .. } => "forecast",
            Task::Compare(_) => "compare",
            Task::Metrics(_) => "metrics",
            Task::Simulate(_) => "simulate",
            Task::Recover { .. } => "recover",
        }
    }
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub task: Task,
    pub output: OutputFormat,
    pub seed: u64,
    pub timestamp: bool,
}

fn parse_range(raw: &str, what: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidInput(format!("{what} must look like lo:hi, got '{raw}'"));
    let (lo, hi) = raw.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

impl DataArgs {
    fn resolve(&self) -> Result<DataConfig> {
        let source = match (&self.builtin, &self.input) {
            (_, Some(path)) => Source::File(path.clone()),
            (Some(id), None) => Source::Builtin(id.clone()),
            (None, None) => Source::Builtin(US_NATGAS_ID.to_string()),
        };
        if !(self.time_scale.is_finite() && self.time_scale > 0.0) {
            return Err(Error::InvalidInput(format!(
                "time scale must be positive, got {}",
                self.time_scale
            )));
        }
        Ok(DataConfig {
            source,
            train: self.train.as_deref().map(|r| parse_range(r, "train")).transpose()?,
            level: self.level,
            search: SearchConfig {
                bracket: parse_range(&self.bracket, "bracket")?,
                tol: self.tol,
                ..SearchConfig::default()
            },
            time: TimeTransform {
                shift: self.time_shift,
                scale: self.time_scale,
            },
        })
    }
}

impl SimArgs {
    fn spec(&self, seed: u64) -> SimulationSpec {
        SimulationSpec {
            lambda: self.lambda,
            sigma: self.sigma,
            t1: self.t1,
            x1: self.x1,
            dt: self.dt,
            n_steps: self.steps,
            n_paths: self.paths,
            seed,
        }
    }
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig> {
        let task = match &self.command {
            Command::Fit(d) => Task::Fit(d.resolve()?),
            Command::Forecast { data, horizon } => Task::Forecast {
                data: data.resolve()?,
                horizon: horizon.clone(),
            },
            Command::Compare(d) => Task::Compare(d.resolve()?),
            Command::Metrics(d) => Task::Metrics(d.resolve()?),
            Command::Simulate(s) => Task::Simulate(s.spec(self.seed)),
            Command::Recover { sim, replicates } => {
                let spec = sim.spec(self.seed);
                Task::Recover {
                    spec,
                    design: RecoveryDesign {
                        t1: spec.t1,
                        x1: spec.x1,
                        dt: spec.dt,
                        n_steps: spec.n_steps,
                        n_replicates: *replicates,
                        seed: self.seed,
                    },
                }
            }
        };
        Ok(RunConfig {
            task,
            output: self.output,
            seed: self.seed,
            timestamp: !self.no_timestamp,
        })
    }
}

/// Rendered result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub structured: Value,
    pub tabular: String,
}

impl Output {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Tabular => self.tabular.clone(),
            OutputFormat::Structured => {
                let mut s = serde_json::to_string_pretty(&self.structured)
                    .expect("JSON values always serialise");
                s.push('\n');
                s
            }
        }
    }
}

/// Machine-readable error document.
pub fn error_document(err: &Error) -> Value {
    json!({
        "tool": TOOL_NAME,
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
            "exit_code": err.exit_code(),
        }
    })
}

/// Shortest round-trip formatting; scientific notation for very small or large magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Dataset {
    full: TimeSeries,
    train: TimeSeries,
}

fn load(cfg: &DataConfig) -> Result<Dataset> {
    let raw = dataset::load_series(&cfg.source)?;
    let full = if cfg.time.is_identity() {
        raw
    } else {
        TimeSeries::new(
            raw.times().iter().map(|&t| cfg.time.apply(t)).collect(),
            raw.values().to_vec(),
            raw.label(),
        )?
    };
    let train = match cfg.train {
        Some((lo, hi)) => full.select(cfg.time.apply(lo), cfg.time.apply(hi))?,
        None => full.clone(),
    };
    Ok(Dataset { full, train })
}

fn is_reference_run(cfg: &DataConfig) -> bool {
    cfg.source == Source::Builtin(US_NATGAS_ID.to_string())
        && cfg.time.is_identity()
        && cfg.train == Some(reference::TRAIN)
}

fn fit_table(r: &FitReport) -> String {
    let mut out = String::from("parameter,value\n");
    let se = r.standard_errors;
    for (k, v) in [
        ("lambda", num(r.lambda())),
        ("sigma", num(r.sigma())),
        ("sigma2", num(r.sigma2)),
        ("log_likelihood", num(r.log_likelihood)),
        ("aic", num(r.aic)),
        ("n_transitions", r.n_transitions.to_string()),
        ("lambda_se", opt_num(se.map(|s| s.lambda))),
        ("sigma_se", opt_num(se.map(|s| s.sigma))),
        ("scaled_score_residual", num(r.solver.scaled_residual)),
        ("converged", r.solver.converged.to_string()),
    ] {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

fn forecast_table(rows: &[ForecastRow]) -> String {
    let mut out = String::from("t,emf,ecmf,lower,upper\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            num(r.t),
            num(r.emf),
            num(r.ecmf),
            num(r.lower),
            num(r.upper)
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub sl: FitReport,
    pub gompertz: GompertzFit,
    pub winner: &'static str,
    pub reference: Option<Value>,
}

pub fn compare(data: &TimeSeries, search: &SearchConfig) -> Result<Comparison> {
    let sl = estimation::fit_sl(data, search)?;
    let gompertz = gompertz::fit_gompertz(data, &GompertzSearch::default())?;
    let winner = if sl.aic < gompertz.aic { "SL" } else { "Gompertz" };
    Ok(Comparison { sl, gompertz, winner, reference: None })
}

fn reference_block(c: &Comparison) -> Value {
    let within = (c.gompertz.aic - reference::GOMPERTZ_AIC).abs() <= reference::GOMPERTZ_AIC_TOL;
    let mut v = json!({
        "sl_aic": reference::SL_AIC,
        "gompertz_aic": reference::GOMPERTZ_AIC,
        "gompertz_aic_tolerance": reference::GOMPERTZ_AIC_TOL,
        "gompertz_aic_within_tolerance": within,
    });
    if !within {
        v["functional_form_discrepancy"] = json!(format!(
            "Gompertz AIC {} differs from the published {} by more than {}; \
             the published Gompertz variant may differ from dX = (lambda - beta ln X) X dt + sigma X dW",
            c.gompertz.aic,
            reference::GOMPERTZ_AIC,
            reference::GOMPERTZ_AIC_TOL
        ));
    }
    v
}

/// EMF accuracy over the observations of `train`.
pub fn emf_accuracy(report: &FitReport, train: &TimeSeries) -> Result<AccuracyReport> {
    let (t1, x1) = train.first();
    let predicted = train
        .times()
        .iter()
        .map(|&t| model::mean_function(&report.params, t1, x1, t))
        .collect::<Result<Vec<_>>>()?;
    metrics::accuracy(train.values(), &predicted)
}

/// Executes one configured invocation.
pub fn run(config: &RunConfig) -> Result<Output> {
    let (result, tabular) = match &config.task {
        Task::Fit(cfg) => {
            let d = load(cfg)?;
            let r = estimation::fit_sl(&d.train, &cfg.search)?;
            (json!({ "fit": r }), fit_table(&r))
        }
        Task::Forecast { data: cfg, horizon } => {
            let d = load(cfg)?;
            let r = estimation::fit_sl(&d.train, &cfg.search)?;
            let horizon: Vec<f64> = horizon.iter().map(|&t| cfg.time.apply(t)).collect();
            // anchors: every observation from the training start onwards
            let anchors = d.full.select(d.train.first().0, f64::INFINITY)?;
            let rows = estimation::estimated_trends(&r, &anchors, &horizon, cfg.level)?;
            let observed: Vec<Option<f64>> = rows
                .iter()
                .map(|row| {
                    d.full
                        .times()
                        .iter()
                        .position(|&t| t == row.t)
                        .map(|i| d.full.values()[i])
                })
                .collect();
            (
                json!({ "fit": r, "level": cfg.level, "rows": rows, "observed": observed }),
                forecast_table(&rows),
            )
        }
        Task::Compare(cfg) => {
            let d = load(cfg)?;
            let mut c = compare(&d.train, &cfg.search)?;
            if is_reference_run(cfg) {
                c.reference = Some(reference_block(&c));
            }
            let mut t = String::from("model,lambda,beta,sigma,log_likelihood,aic\n");
            t.push_str(&format!(
                "SL,{},,{},{},{}\n",
                num(c.sl.lambda()),
                num(c.sl.sigma()),
                num(c.sl.log_likelihood),
                num(c.sl.aic)
            ));
            let g = &c.gompertz;
            t.push_str(&format!(
                "Gompertz,{},{},{},{},{}\n",
                num(g.params.lambda()),
                num(g.params.beta()),
                num(g.params.sigma()),
                num(g.log_likelihood),
                num(g.aic)
            ));
            t.push_str(&format!("# winner: {}\n", c.winner));
            if let Some(flag) = c
                .reference
                .as_ref()
                .and_then(|r| r.get("functional_form_discrepancy"))
            {
                t.push_str(&format!("# warning: {}\n", flag.as_str().unwrap_or_default()));
            }
            for w in &g.warnings {
                t.push_str(&format!("# warning: {w}\n"));
            }
            (serde_json::to_value(&c).expect("serialisable"), t)
        }
        Task::Metrics(cfg) => {
            let d = load(cfg)?;
            let r = estimation::fit_sl(&d.train, &cfg.search)?;
            let acc = emf_accuracy(&r, &d.train)?;
            let mut t = String::from("metric,value\n");
            for (k, v) in [
                ("mae", num(acc.mae)),
                ("rmse", num(acc.rmse)),
                ("mape", num(acc.mape)),
                ("mape_observed", num(acc.mape_observed)),
                ("n", acc.n.to_string()),
                ("classification", format!("{:?}", acc.classification).to_lowercase()),
            ] {
                t.push_str(&format!("{k},{v}\n"));
            }
            (json!({ "fit": r, "accuracy": acc }), t)
        }
        Task::Simulate(spec) => {
            let ens = simulate::simulate_ensemble(spec)?;
            let moments = simulate::moments(&ens);
            let mf_params = SlParams::new(spec.lambda, spec.sigma.max(f64::MIN_POSITIVE))?;
            let mf = ens
                .times
                .iter()
                .map(|&t| model::mean_function(&mf_params, spec.t1, spec.x1, t))
                .collect::<Result<Vec<_>>>()?;
            let mut t = String::from("t");
            for i in 0..ens.paths.len() {
                t.push_str(&format!(",path_{i}"));
            }
            t.push_str(",mean,std_error,mean_function\n");
            for (k, m) in moments.iter().enumerate() {
                t.push_str(&num(ens.times[k]));
                for p in &ens.paths {
                    t.push(',');
                    t.push_str(&num(p[k]));
                }
                t.push_str(&format!(",{},{},{}\n", num(m.mean), num(m.std_error), num(mf[k])));
            }
            (json!({ "ensemble": ens, "moments": moments, "mean_function": mf }), t)
        }
        Task::Recover { spec, design } => {
            let p = SlParams::new(spec.lambda, spec.sigma)?;
            let table = simulate::recovery_experiment(&p, design)?;
            let mut t = String::from("replicate,lambda_hat,sigma_hat,lambda_se,sigma_se,error\n");
            for r in &table.replicates {
                t.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.index,
                    opt_num(r.lambda_hat),
                    opt_num(r.sigma_hat),
                    opt_num(r.lambda_se),
                    opt_num(r.sigma_se),
                    r.error.as_deref().unwrap_or("").replace(',', ";")
                ));
            }
            for (name, s) in [("lambda", table.lambda), ("sigma", table.sigma)] {
                if let Some(s) = s {
                    t.push_str(&format!(
                        "# {name}: truth={} mean={} bias={} sd={} rmse={} n={}\n",
                        num(s.truth),
                        num(s.mean),
                        num(s.bias),
                        num(s.sd),
                        num(s.rmse),
                        s.n
                    ));
                }
            }
            (serde_json::to_value(&table).expect("serialisable"), t)
        }
    };

    let mut doc = json!({
        "tool": TOOL_NAME,
        "version": env!("CARGO_PKG_VERSION"),
        "command": config.task.name(),
        "config": config,
        "seed": config.seed,
        "result": result,
    });
    if config.timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or_default();
        doc["timestamp_unix"] = json!(secs);
    }
    Ok(Output {
        structured: doc,
        tabular,
    })
}

/// Parses `args`, runs, and returns `(exit status, stdout, stderr)`.
pub fn main_with_args<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (0, e.to_string(), String::new()),
                _ => {
                    let err = Error::InvalidInput(e.to_string());
                    (err.exit_code(), String::new(), error_document(&err).to_string() + "\n")
                }
            };
        }
    };
    let outcome = cli.into_config().and_then(|cfg| run(&cfg).map(|out| out.render(cfg.output)));
    match outcome {
        Ok(stdout) => (0, stdout, String::new()),
        Err(err) => (err.exit_code(), String::new(), error_document(&err).to_string() + "\n"),
    }
}
