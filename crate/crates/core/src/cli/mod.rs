//! Command-line front end: config loading, CSV output and the runners.

pub mod config;
pub mod csv;
pub mod runners;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::schmidt_analytic::WidthConvention;
use config::RunConfig;
pub use runners::RunOutcome;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_GEOMETRY: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

/// Environment variable fixing the worker thread count.
pub const THREADS_ENV: &str = "BIPHOTON_THREADS";

#[derive(Debug, Parser)]
#[command(name = "biphoton", version, about = "Schmidt analysis of noncollinear SPDC biphoton states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Schmidt decomposition and entanglement quantifiers of a polarization qutrit.
    Qutrit,
    /// Analytic Schmidt spectrum and merged-beam modes.
    Spectrum,
    /// Numerical SVD of a sampled amplitude against the analytic spectrum.
    SvdCheck,
    /// Data for the approximation and two-peak figures.
    Figures,
    /// Stage-by-stage invariance trace of the beam-merging scheme.
    Pipeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Matched,
    PaperLiteral,
}

impl From<ConventionArg> for WidthConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Matched => WidthConvention::Matched,
            ConventionArg::PaperLiteral => WidthConvention::PaperLiteral,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config (schema 1). Flags below override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub convention: Option<ConventionArg>,
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Points per angular axis.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

impl CommonArgs {
    /// Loads the config file (or defaults) and applies flag overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(c) = self.convention {
            cfg.convention = Some(c.into());
        }
        cfg.n_max = self.nmax.or(cfg.n_max);
        cfg.grid = self.grid.or(cfg.grid);
        cfg.seed = self.seed.or(cfg.seed);
        cfg.tol = self.tol.or(cfg.tol);
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<RunOutcome> {
    let out = output_dir(cfg);
    match command {
        Command::Qutrit => runners::run_qutrit(cfg, &out),
        Command::Spectrum => runners::run_spectrum(cfg, &out),
        Command::SvdCheck => runners::run_svd_check(cfg, &out),
        Command::Figures => runners::run_figures(cfg, &out),
        Command::Pipeline => runners::run_pipeline(cfg, &out),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_) | Error::InsufficientExtent { .. } => EXIT_INPUT,
        Error::Geometry(_) | Error::PeaksNotSeparated { .. } => EXIT_GEOMETRY,
        Error::Quadrature { .. } | Error::Numerical(_) | Error::Linalg(_) | Error::Io(_) => EXIT_NUMERIC,
    }
}

/// Reads the thread count from the environment, `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::invalid(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

/// Full CLI run; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = threads_from_env().and_then(|threads| {
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::numerical(format!("thread pool: {e}")))?;
        }
        let cfg = cli.common.resolve()?;
        dispatch(cli.command, &cfg)
    });
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.pass {
                EXIT_OK
            } else {
                eprintln!("check failed; see summary above");
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
