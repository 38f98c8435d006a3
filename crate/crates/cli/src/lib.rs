//! The `freqadapt` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or shape error,
//! 3 I/O or parse error, 4 degenerate input.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use config::{RunConfig, Settings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] freqadapt::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use freqadapt::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e {
                E::ShapeMismatch(_) | E::InvalidArgument(_) | E::SizeGuard { .. } => EXIT_USAGE,
                E::NonFinite { .. } | E::Format(_) | E::Io(_) => EXIT_IO,
                E::DegenerateSpectrum { .. } | E::SymmetryViolation { .. } => EXIT_DEGENERATE,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "freqadapt", version, about = "Frequency-domain feature adapters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub params: Params,
}

/// Flags shared by every command. Each one maps onto a config-file key.
#[derive(Debug, Args)]
pub struct Params {
    /// `key = value` config file; flags override it
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Root seed; all randomness derives from it
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<String>,
    /// Dirichlet concentrations, one per channel
    #[arg(long, global = true, value_name = "A,..")]
    pub alpha: Option<String>,
    /// Attention key width
    #[arg(long, global = true, value_name = "N")]
    pub dk: Option<String>,
    /// Radial cut for band energy, in (0, 1)
    #[arg(long, global = true, value_name = "F")]
    pub cut: Option<String>,
    /// Stage assignments, e.g. `1=sda,3=cca`
    #[arg(long, global = true, value_name = "I=KIND,..")]
    pub stage: Option<String>,
    /// Synthetic text token count
    #[arg(long, global = true, value_name = "N")]
    pub text_tokens: Option<String>,
    /// Synthetic text embedding width
    #[arg(long, global = true, value_name = "N")]
    pub text_dim: Option<String>,
    /// Add an output-projection bias to attention
    #[arg(long, global = true)]
    pub bias: bool,
    /// Residual placement: before or after the projection
    #[arg(long, global = true, value_name = "WHERE")]
    pub residual: Option<String>,
    /// Amplitude normalization groups: channel or tensor
    #[arg(long, global = true, value_name = "GROUPS")]
    pub norm: Option<String>,
    /// Dirichlet weight scaling: times_c or raw
    #[arg(long, global = true, value_name = "MODE")]
    pub scale_mode: Option<String>,
    /// Gradcheck probes per op
    #[arg(long, global = true, value_name = "N")]
    pub probes: Option<String>,
    /// Gradcheck ops: silu, amp_normalize, cross_attention, sda, cca
    #[arg(long, global = true, value_name = "OP,..")]
    pub ops: Option<String>,
    /// Feature kind for `gen`: noise, smooth or checker
    #[arg(long, global = true, value_name = "KIND")]
    pub kind: Option<String>,
    /// `C,H,W` for `gen`
    #[arg(long, global = true, value_name = "C,H,W")]
    pub dims: Option<String>,
    /// Input tensor file; repeat for `apply stack`
    #[arg(long = "in", global = true, value_name = "PATH")]
    pub inputs: Vec<String>,
    /// Output tensor file; repeat for `apply stack`
    #[arg(long = "out", global = true, value_name = "PATH")]
    pub outputs: Vec<String>,
}

impl Params {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        let pairs = [
            ("seed", &self.seed),
            ("alpha", &self.alpha),
            ("dk", &self.dk),
            ("cut", &self.cut),
            ("stage", &self.stage),
            ("text_tokens", &self.text_tokens),
            ("text_dim", &self.text_dim),
            ("residual", &self.residual),
            ("norm", &self.norm),
            ("scale_mode", &self.scale_mode),
            ("probes", &self.probes),
            ("ops", &self.ops),
            ("kind", &self.kind),
            ("dims", &self.dims),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, v)?;
            }
        }
        if self.bias {
            s.set("bias", "true")?;
        }
        if !self.inputs.is_empty() {
            s.set("in", &self.inputs.join(","))?;
        }
        if !self.outputs.is_empty() {
            s.set("out", &self.outputs.join(","))?;
        }
        Ok(s)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic feature map
    Gen,
    /// Run a transform on tensor files
    Apply {
        #[arg(value_enum)]
        transform: Transform,
        /// SDA only: force sigma = 1, mu = 0 (output reproduces input)
        #[arg(long)]
        identity: bool,
    },
    /// Centered log-amplitude heatmap of a feature map
    Heatmap {
        #[arg(long, value_name = "PATH")]
        pgm: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Run the verification suites against the reference oracles
    Verify {
        #[arg(value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
    /// Compare analytic directional derivatives with finite differences
    Gradcheck {
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transform {
    Sda,
    Cca,
    Plain,
    Stack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Spectral,
    Sda,
    Cca,
    Grad,
    All,
}

/// Applies `FREQADAPT_THREADS` (unset or 0 means rayon's default).
fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FREQADAPT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("FREQADAPT_THREADS = '{v}' is not a count")))?;
    if n > 0 {
        // A pool may already exist when called twice in one process (tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let mut settings = match &cli.params.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    settings.overlay(cli.params.settings()?);
    if let Command::Apply { identity: true, .. } = cli.command {
        settings.set("identity", "true")?;
    }
    let cfg = RunConfig::resolve(&settings)?;
    match cli.command {
        Command::Gen => commands::gen(&cfg),
        Command::Apply { transform, .. } => commands::apply(transform, &cfg),
        Command::Heatmap { pgm, csv } => commands::heatmap(&cfg, pgm.as_deref(), csv.as_deref()),
        Command::Verify { suite } => Ok(verify::run(suite, &cfg)),
        Command::Gradcheck { csv } => commands::gradcheck(&cfg, csv.as_deref()),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
