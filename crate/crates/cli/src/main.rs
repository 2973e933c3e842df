use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use covberry::berry::ClosedFormVariant;
use covberry::{HbarConvention, OmegaConvention, StateIndex};

mod commands;
mod config;

use config::{ConfigError, Format, MethodChoice, RunConfig, StateSelection};

/// Berry phases of the perturbed covariant harmonic oscillator.
#[derive(Debug, Parser)]
#[command(name = "covberry", version)]
struct Cli {
    /// Key-value configuration file; flags override its entries.
    #[arg(long, env = "COVBERRY_CONFIG", global = true)]
    config: Option<PathBuf>,
    /// Frequency in MHz for every row.
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// Report γ/r² with couplings in units of Mω².
    #[arg(long, global = true)]
    dimensionless: bool,
    /// Quadrature nodes on every axis.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `angular` or `cyclic`.
    #[arg(long, global = true)]
    omega_convention: Option<OmegaConvention>,
    /// `hbar` or `h`.
    #[arg(long, global = true)]
    hbar_convention: Option<HbarConvention>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct LoopArgs {
    #[arg(long)]
    steps: Option<usize>,
    /// Loop radius in units of Mω².
    #[arg(long)]
    radius: Option<f64>,
    /// Traverse the loop clockwise.
    #[arg(long)]
    backwards: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Injection {
    SignFlip,
    Unconjugated,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase table for the published states.
    Table {
        /// Comma-separated indices or `all`.
        #[arg(long)]
        states: Option<StateSelection>,
    },
    /// Phase of one state.
    Phase {
        #[arg(long)]
        state: StateIndex,
        #[arg(long, value_enum)]
        method: Option<MethodChoice>,
        #[command(flatten)]
        lp: LoopArgs,
    },
    /// Closed form against both loop discretizations.
    Oracle {
        #[arg(long)]
        state: StateIndex,
        #[command(flatten)]
        lp: LoopArgs,
    },
    /// Invariant and convergence checks.
    Validate {
        #[arg(long)]
        steps: Option<usize>,
        /// Deliberately corrupt the closed form.
        #[arg(long, value_enum, hide = true)]
        inject: Option<Injection>,
    },
}

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Config(String),
    NonConvergence(String),
    Numerical(covberry::Error),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) | Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::NonConvergence(_) => 3,
            Failure::Numerical(e) => match e {
                covberry::Error::Parameter(_) | covberry::Error::UndefinedCorrection(_) => 2,
                covberry::Error::StepResolution { .. } | covberry::Error::Evaluation { .. } => 3,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(s) => write!(f, "validation failed: {s}"),
            Failure::Config(s) => write!(f, "configuration error: {s}"),
            Failure::NonConvergence(s) => write!(f, "not converged: {s}"),
            Failure::Numerical(e) => write!(f, "{e}"),
            Failure::Io(s) => write!(f, "output error: {s}"),
        }
    }
}

impl From<covberry::Error> for Failure {
    fn from(e: covberry::Error) -> Self {
        Failure::Numerical(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(w) = cli.omega {
        cfg.omega_mhz = Some(w);
    }
    cfg.dimensionless |= cli.dimensionless;
    if let Some(n) = cli.nodes {
        cfg.nodes = covberry::QuadConfig::uniform(n);
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(c) = cli.omega_convention {
        cfg.omega_convention = c;
    }
    if let Some(c) = cli.hbar_convention {
        cfg.hbar_convention = c;
    }
    let lp = match &cli.command {
        Command::Table { states } => {
            if let Some(s) = states {
                cfg.states = s.clone();
            }
            None
        }
        Command::Phase { method, lp, .. } => {
            if let Some(m) = method {
                cfg.method = *m;
            }
            Some(lp)
        }
        Command::Oracle { lp, .. } => Some(lp),
        Command::Validate { steps, .. } => {
            if let Some(s) = steps {
                cfg.steps = *s;
            }
            None
        }
    };
    if let Some(lp) = lp {
        if let Some(s) = lp.steps {
            cfg.steps = s;
        }
        if let Some(r) = lp.radius {
            cfg.radius = Some(r);
        }
        cfg.backwards |= lp.backwards;
    }
    cfg.check()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve(cli)?;
    let rendered = match &cli.command {
        Command::Table { .. } => commands::table(&cfg)?,
        Command::Phase { state, .. } => commands::phase(&cfg, *state)?,
        Command::Oracle { state, .. } => commands::oracle(&cfg, *state)?,
        Command::Validate { inject, .. } => {
            let variant = match inject {
                None => ClosedFormVariant::Standard,
                Some(Injection::SignFlip) => ClosedFormVariant::SignFlipped,
                Some(Injection::Unconjugated) => ClosedFormVariant::Unconjugated,
            };
            commands::run_validate(&cfg, variant)?
        }
    };
    match &cfg.out {
        Some(path) => fs::write(path, &rendered.text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        None => print!("{}", rendered.text),
    }
    rendered.outcome
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("covberry: {e}");
            ExitCode::from(e.code())
        }
    }
}
