use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use ris_broadcast::bounds::SemiAnalyticSearchCfg;
use ris_broadcast::channel::ScenarioConfig;
use ris_broadcast::harness::{
    closed_form, format_summary, run_sweep, solve_method, summarize, write_csv, Method, SweepSpec, SweepVariable,
};
use ris_broadcast::numerics::watts_to_dbm;

#[derive(Parser, Debug)]
#[command(name = "ris-broadcast", version, about = "RIS-aided broadcast power minimization")]
struct Cli {
    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve one instance and print the report as JSON.
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: SolveMethod,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Monte Carlo sweep written as CSV, summary printed in dBm.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "var")]
        variable: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "sdr,sca,random-ris,mmse")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
        /// Record per-task wall time (makes the CSV non-reproducible).
        #[arg(long)]
        wall_time: bool,
    },
    /// Evaluate one lower bound on a drawn instance.
    Bound {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: BoundKind,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SolveMethod {
    Sdr,
    Sca,
    RandomRis,
    Mmse,
}

impl From<SolveMethod> for Method {
    fn from(m: SolveMethod) -> Method {
        match m {
            SolveMethod::Sdr => Method::Sdr,
            SolveMethod::Sca => Method::Sca,
            SolveMethod::RandomRis => Method::RandomRis,
            SolveMethod::Mmse => Method::Mmse,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BoundKind {
    Analytic,
    Semi,
    Random,
    Noris,
}

impl From<BoundKind> for Method {
    fn from(k: BoundKind) -> Method {
        match k {
            BoundKind::Analytic => Method::LbAnalytic,
            BoundKind::Semi => Method::LbSemi,
            BoundKind::Random => Method::LbRandom,
            BoundKind::Noris => Method::LbNoris,
        }
    }
}

fn load_config(path: Option<&PathBuf>, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ScenarioConfig::from_json(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be >= 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.cmd {
        Cmd::Solve { config, method, trial } => {
            let cfg = load_config(config.as_ref(), cli.seed)?;
            let report = solve_method(&cfg, (*method).into(), *trial)?;
            serde_json::to_writer_pretty(io::stdout().lock(), &report)?;
            println!();
        }
        Cmd::Sweep {
            config,
            variable,
            values,
            methods,
            trials,
            out,
            wall_time,
        } => {
            let cfg = load_config(config.as_ref(), cli.seed)?;
            let methods = methods
                .iter()
                .map(|m| m.parse::<Method>())
                .collect::<Result<Vec<_>, _>>()?;
            let mut spec = SweepSpec::new(variable.parse::<SweepVariable>()?, values.clone(), methods, *trials, cfg);
            spec.record_wall_time = *wall_time;
            let rows = run_sweep(&spec)?;
            let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
            write_csv(BufWriter::new(file), &rows)?;
            info!("wrote {} rows to {}", rows.len(), out.display());
            print!("{}", format_summary(&summarize(&rows)));
        }
        Cmd::Bound { config, kind, trial } => {
            let cfg = load_config(config.as_ref(), cli.seed)?;
            let p = closed_form(&cfg, (*kind).into(), *trial, &SemiAnalyticSearchCfg::default())?;
            println!("{p:.6e} W ({:.3} dBm)", watts_to_dbm(p));
        }
    }
    Ok(())
}
