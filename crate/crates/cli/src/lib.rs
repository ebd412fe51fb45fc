//! Command-line experiment harness: dataset generation, ELM training, sweeps
//! over SNR and array size, timing and convergence traces.
//!
//! Every command resolves one [`ExperimentConfig`] (defaults, then the TOML
//! file, then command-line flags) and embeds it in whatever it writes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use fdhbf_core::Activation;

pub mod bench;
pub mod config;
pub mod data;
pub mod eval;
pub mod trace;

pub use config::{ExperimentConfig, SweepPoint};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 1 for configuration problems, 2 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<fdhbf_core::Error> for CliError {
    fn from(e: fdhbf_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("I/O error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(format!("CSV error: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "fdhbf", version, about = "Hybrid beamforming experiments for full-duplex mmWave relays")]
pub struct Cli {
    /// TOML configuration file; unset keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base seed (overrides `seed` in the configuration).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (overrides `out` in the configuration).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a training set of noisy channels labelled by the optimizer.
    GenData,
    /// Train the relay ELM on a dataset file.
    Train {
        #[arg(long, value_name = "PATH", default_value = "dataset.fdhbf")]
        data: PathBuf,
        /// Hidden-node activation: prelu, sigmoid or multiquadric_rbf.
        #[arg(long)]
        activation: Option<Activation>,
    },
    /// Sweep the configured grid and write a results CSV.
    Eval {
        /// Trained model; adds ELM rows at matching sweep points.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Median wall-clock of optimization versus ELM prediction.
    Bench {
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Per-iteration ADMM and MM traces.
    Trace,
    /// Print the resolved configuration.
    ShowConfig,
}

impl Command {
    fn default_out(&self) -> &'static str {
        match self {
            Command::GenData => "dataset.fdhbf",
            Command::Train { .. } => "model.fdhbf",
            Command::Eval { .. } => "results.csv",
            Command::Bench { .. } => "bench.csv",
            Command::Trace => "trace.csv",
            Command::ShowConfig => "",
        }
    }
}

/// Defaults, then the file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if let Command::Train { activation: Some(a), .. } = &cli.command {
        cfg.elm.activation = *a;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(cli.command.default_out()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::GenData => data::cmd_gen_data(&cfg, &out),
        Command::Train { data, .. } => data::cmd_train(&cfg, data, &out),
        Command::Eval { model } => eval::cmd_eval(&cfg, model.as_deref(), &out),
        Command::Bench { model } => bench::cmd_bench(&cfg, model.as_deref(), &out),
        Command::Trace => trace::cmd_trace(&cfg, &out),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    })
}

/// Opens `path` and writes the `#`-prefixed preamble (title and resolved
/// configuration) that precedes the CSV header.
pub fn csv_with_preamble(path: &Path, title: &str, cfg: &ExperimentConfig) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let file = File::create(path).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# {title}")?;
    writeln!(w, "# fdhbf {}", env!("CARGO_PKG_VERSION"))?;
    for line in cfg.to_toml().lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(csv::Writer::from_writer(w))
}

/// Reader that skips the preamble.
pub fn csv_reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?)
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}
