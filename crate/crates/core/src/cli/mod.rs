//! Command-line front end.
//!
//! All commands share one working directory (`--out`) holding the generated
//! datasets, fitted models and reports. Exit codes: 0 on success, 1 for usage
//! and configuration errors, 2 for failures during computation.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{artifacts, Artifacts};
pub use config::{CliConfig, EmSection, GnnSection, Overrides, TrainSection};

use crate::error::Error;
use crate::eval::{parse_methods, Method, Preset};

#[derive(Debug, Parser)]
#[command(name = "statprec", version, about = "Statistical multi-user precoder design")]
pub struct Cli {
    /// TOML configuration with optional [system], [em], [train] and [gnn] tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `system.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Working directory for datasets, models and reports.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Print the plan without computing or writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Base system setup: fig2, fig3a, fig3b or desk.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainMode {
    /// True covariance statistics.
    Genie,
    /// GMM feedback chosen from perfect CSI.
    GmmH,
    /// GMM feedback chosen from pilot observations.
    GmmY,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the mixture set and the train, validation and test scenarios.
    GenData,
    /// Fit the Gaussian mixture prior by EM.
    FitGmm {
        /// Continue from the saved model instead of a fresh start.
        #[arg(long)]
        resume: bool,
    },
    /// Train a precoder network.
    TrainGnn {
        #[arg(long, value_enum)]
        mode: TrainMode,
        /// 10 scenarios and a single epoch.
        #[arg(long)]
        smoke: bool,
    },
    /// Evaluate methods on the test set and write a CSV report.
    Evaluate {
        /// Comma-separated method names, optionally `name@iters`.
        #[arg(long)]
        methods: Option<String>,
        /// Record wall-clock runtime (reports are then not byte-reproducible).
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(Error),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

/// A validated invocation.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config: CliConfig,
    pub dry_run: bool,
    pub action: Action,
}

#[derive(Debug, Clone)]
pub enum Action {
    GenData,
    FitGmm { resume: bool },
    TrainGnn { mode: TrainMode, smoke: bool },
    Evaluate { methods: Vec<Method>, timing: bool },
}

impl Cli {
    /// Parses presets, method lists and the configuration file.
    pub fn resolve(&self) -> crate::Result<Invocation> {
        let preset = self.preset.as_deref().map(str::parse::<Preset>).transpose()?;
        if self.threads == Some(0) {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        let overrides = Overrides { seed: self.seed };
        let config = CliConfig::load(self.config.as_deref(), preset, self.out.clone(), &overrides)?;
        let action = match &self.command {
            Command::GenData => Action::GenData,
            Command::FitGmm { resume } => Action::FitGmm { resume: *resume },
            Command::TrainGnn { mode, smoke } => Action::TrainGnn {
                mode: *mode,
                smoke: *smoke,
            },
            Command::Evaluate { methods, timing } => Action::Evaluate {
                methods: match methods {
                    Some(list) => parse_methods(list)?,
                    None => Method::all(),
                },
                timing: *timing,
            },
        };
        Ok(Invocation {
            config,
            dry_run: self.dry_run,
            action,
        })
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let inv = cli.resolve().map_err(CliError::Usage)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(Error::invalid(e.to_string())))?;
    }
    commands::execute(&inv).map_err(CliError::Runtime)
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("STATPREC_LOG", "info");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Usage(inner) | CliError::Runtime(inner)) = &e;
            eprintln!("error: {inner}");
            ExitCode::from(e.exit_code())
        }
    }
}
