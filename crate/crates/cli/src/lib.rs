//! Command-line front end: data generation, remeshing, evaluation and field
//! file utilities.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use featremesh::fieldgen::SidecarFormat;

pub mod commands;
pub mod config;

pub use config::{DataConfig, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] featremesh::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 1 usage, 2 bad input, 3 broken internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Core(featremesh::Error::Invariant(_)) | CliError::Internal(_) => 3,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "featremesh",
    version,
    about = "Feature-aware remeshing of iso-surfaced meshes"
)]
pub struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML configuration applied over the defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a coarse mesh, its grid, correspondences and ground-truth fields.
    GenData(GenDataArgs),
    /// Refine a coarse mesh with fields from a provider.
    Remesh(RemeshArgs),
    /// Compare a reconstruction with ground truth.
    Eval(EvalArgs),
    /// Export or inspect field sidecar directories.
    #[command(subcommand)]
    Fields(FieldsCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Binary,
}

impl From<FormatArg> for SidecarFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => SidecarFormat::Csv,
            FormatArg::Binary => SidecarFormat::Binary,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Ground-truth mesh (OBJ).
    #[arg(long)]
    pub mesh: PathBuf,
    /// Feature curves (JSON, or YAML by extension).
    #[arg(long, conflicts_with = "abc_features")]
    pub curves: Option<PathBuf>,
    /// ABC-style feature YAML with curve vertex indices.
    #[arg(long)]
    pub abc_features: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Samples per characteristic feature size.
    #[arg(long)]
    pub samples: Option<f64>,
    #[arg(long)]
    pub max_grid: Option<usize>,
    #[arg(long)]
    pub no_rotate: bool,
    /// Fraction of faces kept by simplification.
    #[arg(long, conflicts_with = "no_simplify")]
    pub simplify: Option<f64>,
    #[arg(long)]
    pub no_simplify: bool,
    /// Also write the patch dataset.
    #[arg(long)]
    pub patches: bool,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderKind {
    Oracle,
    Heuristic,
    Files,
}

#[derive(Debug, Args)]
pub struct RemeshArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub provider: ProviderKind,
    /// Ground-truth mesh for the oracle provider.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Ground-truth curves for the oracle provider.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Field directory for the files provider.
    #[arg(long)]
    pub fields: Option<PathBuf>,
    /// Sampling distance; defaults to the median edge length of the input.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Stage report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Directory receiving the mesh after every stage.
    #[arg(long)]
    pub dump_stages: Option<PathBuf>,
    #[arg(long)]
    pub alpha_prox: Option<f64>,
    #[arg(long)]
    pub flip_threshold: Option<f64>,
    #[arg(long)]
    pub flip_sets: Option<usize>,
    #[arg(long)]
    pub simplify: Option<f64>,
    #[arg(long)]
    pub no_postprocess: bool,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub recon: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub curves: PathBuf,
    /// Report path; JSON for `.json`, CSV otherwise.
    #[arg(long)]
    pub out: PathBuf,
    /// Sampling distance; defaults to the median edge length of `recon`.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Predicted field directory, compared against `--true-fields`.
    #[arg(long, requires = "true_fields")]
    pub pred_fields: Option<PathBuf>,
    #[arg(long)]
    pub true_fields: Option<PathBuf>,
    /// Name of the mesh pair in the report.
    #[arg(long, default_value = "recon")]
    pub name: String,
}

#[derive(Debug, Subcommand)]
pub enum FieldsCommand {
    /// Write exact fields of a mesh against ground truth.
    Export(FieldsExportArgs),
    /// Summarize a field directory.
    Inspect(FieldsInspectArgs),
}

#[derive(Debug, Args)]
pub struct FieldsExportArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub curves: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip the flip improvement field.
    #[arg(long)]
    pub no_improvement: bool,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct FieldsInspectArgs {
    #[arg(long)]
    pub dir: PathBuf,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.sources.push("flags".into());
    }
    cfg.propagate_seed();
    let run = || match &cli.command {
        Command::GenData(a) => commands::gen_data(a, cfg.clone()),
        Command::Remesh(a) => commands::remesh(a, cfg.clone()),
        Command::Eval(a) => commands::eval(a, cfg.clone()),
        Command::Fields(FieldsCommand::Export(a)) => commands::fields_export(a, cfg.clone()),
        Command::Fields(FieldsCommand::Inspect(a)) => commands::fields_inspect(a),
    };
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?
            .install(run),
        None => run(),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Runs the command line in `args` and returns the process exit code.
/// Errors are printed to stderr as one line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let head: Vec<&str> = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .collect();
            eprintln!("{}", one_line(&head.join(" ")));
            return 1;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(cli)));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            e.exit_code()
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            eprintln!("error: internal error: {}", one_line(&msg));
            3
        }
    }
}
