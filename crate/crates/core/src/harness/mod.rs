//! Monte Carlo sweeps over `N`, `γ` or `K` with CSV output.

mod io;

use std::fmt;
use std::str::FromStr;
use std::sync::mpsc;
use std::time::Instant;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{mmse_no_ris, random_phase_ris, zf_power};
use crate::bounds::{
    analytical_lb_no_ris, analytical_lb_random_phase, analytical_lb_ris, semi_analytical_lb_ris, BoundInputs,
    SemiAnalyticSearchCfg,
};
use crate::channel::{streams, ChannelSet, ScenarioConfig};
use crate::error::{Error, Result};
use crate::numerics::{stream_id, watts_to_dbm, RngStream};
use crate::sca_opt::alternate_sca;
use crate::sdr_opt::{alternate_sdr, AlternatingConfig, RunStatus, SolveReport};

pub use io::{format_summary, read_csv, summarize, write_csv, SummaryRow, CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "N")]
    N,
    #[serde(rename = "gamma_db")]
    GammaDb,
    #[serde(rename = "K")]
    K,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::N => "N",
            SweepVariable::GammaDb => "gamma_db",
            SweepVariable::K => "K",
        }
    }

    /// Copy of `base` with this variable set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let count = || -> Result<usize> {
            if value < 0.0 || value.fract() != 0.0 || !value.is_finite() {
                return Err(Error::InvalidInput(format!("{} must be a non-negative integer, got {value}", self)));
            }
            Ok(value as usize)
        };
        match self {
            SweepVariable::N => cfg.n = count()?,
            SweepVariable::K => cfg.k = count()?,
            SweepVariable::GammaDb => cfg.gamma_db = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" => Ok(SweepVariable::N),
            "gamma_db" | "gamma" => Ok(SweepVariable::GammaDb),
            "K" => Ok(SweepVariable::K),
            _ => Err(Error::InvalidInput(format!("unknown sweep variable {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sdr,
    Sca,
    RandomRis,
    Mmse,
    Zf,
    LbAnalytic,
    LbSemi,
    LbRandom,
    LbNoris,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Sdr,
        Method::Sca,
        Method::RandomRis,
        Method::Mmse,
        Method::Zf,
        Method::LbAnalytic,
        Method::LbSemi,
        Method::LbRandom,
        Method::LbNoris,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sdr => "sdr",
            Method::Sca => "sca",
            Method::RandomRis => "random-ris",
            Method::Mmse => "mmse",
            Method::Zf => "zf",
            Method::LbAnalytic => "lb-analytic",
            Method::LbSemi => "lb-semi",
            Method::LbRandom => "lb-random",
            Method::LbNoris => "lb-noris",
        }
    }

    fn id(self) -> u64 {
        Method::ALL.iter().position(|&m| m == self).unwrap_or(0) as u64
    }

    pub fn is_bound(self) -> bool {
        matches!(self, Method::LbAnalytic | Method::LbSemi | Method::LbRandom | Method::LbNoris)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub base: ScenarioConfig,
    #[serde(default)]
    pub semi: SemiAnalyticSearchCfg,
    /// Wall-clock times vary between runs; off by default so reruns are
    /// byte-identical.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, values: Vec<f64>, methods: Vec<Method>, trials: usize, base: ScenarioConfig) -> Self {
        SweepSpec {
            variable,
            values,
            methods,
            trials,
            base,
            semi: SemiAnalyticSearchCfg::default(),
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidInput("sweep values must be nonempty".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("sweep values must be strictly ascending".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("at least one method is required".into()));
        }
        self.semi.validate()?;
        for &v in &self.values {
            self.variable.apply(&self.base, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub sweep_variable: SweepVariable,
    pub sweep_value: f64,
    pub trial: u64,
    pub power_w: f64,
    pub power_dbm: f64,
    pub iterations: usize,
    pub status: String,
    pub seed: u64,
    pub wall_time_s: f64,
}

pub const STATUS_INFEASIBLE: &str = "infeasible";
pub const STATUS_ERROR: &str = "error";

impl ResultRow {
    /// Rows whose `power_w` is a valid transmit power or bound.
    pub fn is_feasible(&self) -> bool {
        self.status != STATUS_INFEASIBLE && self.status != STATUS_ERROR && self.power_w.is_finite()
    }
}

fn run_status(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Converged => "converged",
        RunStatus::PhaseInfeasible => "phase_infeasible",
        RunStatus::IterCap => "iter_cap",
    }
}

/// Stream for method `method` in trial `trial`, independent of the sweep value.
pub fn method_rng(seed: u64, trial: u64, method: Method) -> RngStream {
    RngStream::new(seed, stream_id(streams::METHOD, trial, method.id()))
}

/// Runs one optimization method on trial `trial` of `cfg`.
pub fn solve_method(cfg: &ScenarioConfig, method: Method, trial: u64) -> Result<SolveReport> {
    let cs = ChannelSet::generate(cfg, trial)?;
    let ac = AlternatingConfig::from_scenario(cfg);
    let mut rng = method_rng(cfg.seed, trial, method);
    match method {
        Method::Sdr => alternate_sdr(&cs, &ac, &mut rng),
        Method::Sca => alternate_sca(&cs, &ac, &mut rng),
        Method::RandomRis => random_phase_ris(&cs, ac.gamma, ac.sigma2, &mut rng),
        Method::Mmse => mmse_no_ris(&cs, ac.gamma, ac.sigma2, ac.n_rand, &mut rng),
        _ => Err(Error::InvalidInput(format!("{method} is not an optimization method"))),
    }
}

/// Closed-form value (ZF power or a lower bound) for trial `trial` of `cfg`,
/// using that trial's path losses.
pub fn closed_form(cfg: &ScenarioConfig, method: Method, trial: u64, semi: &SemiAnalyticSearchCfg) -> Result<f64> {
    let cs = ChannelSet::generate(cfg, trial)?;
    let b = BoundInputs::from_channel(&cs, cfg.gamma(), cfg.sigma2());
    match method {
        Method::Zf => zf_power(&cs, cfg.gamma(), cfg.sigma2()),
        Method::LbAnalytic => analytical_lb_ris(&b),
        Method::LbRandom => analytical_lb_random_phase(&b),
        Method::LbNoris => analytical_lb_no_ris(&b),
        Method::LbSemi => {
            let mut rng = RngStream::new(cfg.seed, stream_id(streams::BOUND, trial, 0));
            semi_analytical_lb_ris(&b, semi, &cs.h_br, &mut rng)
        }
        _ => Err(Error::InvalidInput(format!("{method} has no closed form"))),
    }
}

fn run_task(spec: &SweepSpec, value: f64, trial: u64, method: Method) -> ResultRow {
    let start = Instant::now();
    let outcome = spec.variable.apply(&spec.base, value).and_then(|cfg| {
        if method == Method::Zf || method.is_bound() {
            let status = if method == Method::Zf { "closed_form" } else { "bound" };
            closed_form(&cfg, method, trial, &spec.semi).map(|p| (p, 0, status))
        } else {
            solve_method(&cfg, method, trial).map(|r| (r.final_power, r.iterations, run_status(r.status)))
        }
    });
    let elapsed = start.elapsed().as_secs_f64();
    let (power_w, iterations, status) = match outcome {
        Ok((p, it, s)) => (p, it, s.to_string()),
        Err(Error::Infeasible(msg)) => {
            debug!("{method} value={value} trial={trial}: infeasible: {msg}");
            (f64::NAN, 0, STATUS_INFEASIBLE.to_string())
        }
        Err(e) => {
            debug!("{method} value={value} trial={trial}: {e}");
            (f64::NAN, 0, STATUS_ERROR.to_string())
        }
    };
    ResultRow {
        method,
        sweep_variable: spec.variable,
        sweep_value: value,
        trial,
        power_w,
        power_dbm: if power_w.is_finite() { watts_to_dbm(power_w) } else { f64::NAN },
        iterations,
        status,
        seed: spec.base.seed,
        wall_time_s: if spec.record_wall_time { elapsed } else { 0.0 },
    }
}

fn row_order(a: &ResultRow, b: &ResultRow) -> std::cmp::Ordering {
    a.method
        .cmp(&b.method)
        .then(a.sweep_value.total_cmp(&b.sweep_value))
        .then(a.trial.cmp(&b.trial))
}

/// One row per `(method, value, trial)`, sorted by method, value, trial.
/// Trial failures become status rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let tasks: Vec<(f64, u64, Method)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.trials as u64).flat_map(move |t| spec.methods.iter().map(move |&m| (v, t, m))))
        .collect();
    let total = tasks.len();
    info!("sweep over {} with {total} tasks", spec.variable);
    let (tx, rx) = mpsc::channel::<ResultRow>();
    let collector = std::thread::spawn(move || {
        let mut rows = Vec::with_capacity(total);
        for row in rx {
            rows.push(row);
            if rows.len() % 50 == 0 {
                info!("{}/{total} tasks done", rows.len());
            }
        }
        rows
    });
    tasks
        .par_iter()
        .for_each_with(tx, |tx, &(v, t, m)| {
            // The receiver lives until every sender is dropped.
            let _ = tx.send(run_task(spec, v, t, m));
        });
    let mut rows = collector
        .join()
        .map_err(|_| Error::Numerical("result collector panicked".into()))?;
    rows.sort_by(row_order);
    Ok(rows)
}
