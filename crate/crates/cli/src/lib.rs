//! `tocount` command-line front end.
//!
//! Each subcommand reads its inputs, calls into `tocount-core` and writes a
//! comma-separated table with a header row to stdout or `--out`.

mod commands;
mod number;
mod svg;
mod table;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use tocount_core::{Activation, AnalysisLevel, CostTable, FloatFormat, ModelSpec};

pub use commands::sweep::SweepRow;
pub use commands::workload;
pub use number::{sig6, NumberStyle};

/// Exit status for input, parse and validation problems.
pub const EXIT_INPUT: i32 = 2;
/// Exit status for configurations the cost model does not cover.
pub const EXIT_UNSUPPORTED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: tocount_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } if source.is_unsupported() => EXIT_UNSUPPORTED,
            _ => EXIT_INPUT,
        }
    }

    fn core(context: impl Into<String>) -> impl FnOnce(tocount_core::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "tocount",
    version,
    about = "Transistor-operation energy estimates for neural networks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Which run steps to count.
    #[arg(long, global = true, default_value = "inference", value_parser = parse_level)]
    pub level: AnalysisLevel,
    /// Float format, overriding the one in the model file.
    #[arg(long, global = true, value_parser = parse_format)]
    pub format: Option<FloatFormat>,
    /// Circuit cost table; built-in defaults when absent.
    #[arg(long, global = true, env = "TOCOUNT_COST_TABLE")]
    pub cost_table: Option<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print numbers at full precision instead of 6 significant digits.
    #[arg(long, global = true)]
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Tos,
    Flops,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-layer basic-operation counts.
    Count { model: PathBuf },
    /// Transistor-operation report for one model.
    Tos { model: PathBuf },
    /// Integrate power traces into per-run energies and per-model means.
    ///
    /// A trace named `<model_id>__<run_id>.csv` is attributed to that model
    /// and run; otherwise the file stem is the model id.
    Ingest {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Column mapping for vendor power logs.
        #[arg(long)]
        adapter: Option<PathBuf>,
        /// Runs dropped from each end before averaging.
        #[arg(long, default_value_t = 5)]
        trim_k: usize,
        /// Also write every run's energy to this file.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Fit the linear energy model.
    ///
    /// Either pass a `tos,joules` pairs file, or measured per-model energies
    /// together with the model files to count.
    Fit {
        pairs: Option<PathBuf>,
        /// `model_id,joules` table, e.g. the output of `ingest`.
        #[arg(long, requires = "models", conflicts_with = "pairs")]
        energies: Option<PathBuf>,
        #[arg(long, num_args = 1.., requires = "energies")]
        models: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "tos")]
        metric: Metric,
    },
    /// Predict energies of models with a fitted model.
    Estimate {
        #[arg(required = true)]
        models: Vec<PathBuf>,
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, value_enum, default_value = "tos")]
        metric: Metric,
    },
    /// Counts over a width x activation family derived from a base model.
    Sweep {
        base: PathBuf,
        /// Inclusive width range, `a..b` or a single width.
        #[arg(long, value_parser = parse_widths)]
        widths: WidthRange,
        /// Comma-separated activations; defaults to sigmoid,tanh,gelu.
        #[arg(long, value_delimiter = ',', value_parser = parse_activation)]
        activations: Vec<Activation>,
        /// Adds a predicted energy column.
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Also render TOs against width as SVG.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Precision and error of two prediction sets against measurements.
    Compare {
        /// `model_id,predicted_j[,group]` from the TOs pipeline.
        #[arg(long)]
        tos: PathBuf,
        /// `model_id,predicted_j[,group]` from the FLOPs pipeline.
        #[arg(long)]
        flops: PathBuf,
        /// `model_id,joules[,group]` measured energies.
        #[arg(long)]
        actual: PathBuf,
    },
    /// Pick the candidate minimizing alpha*energy + (1-alpha)*loss.
    Tradeoff {
        candidates: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
    /// Cross-check the counter against an instrumented execution.
    #[command(hide = true)]
    Oracle { model: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WidthRange {
    pub start: usize,
    pub end: usize,
}

impl WidthRange {
    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }
}

fn parse_widths(s: &str) -> Result<WidthRange, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("`{t}` is not a width"))
    };
    let (start, end) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => (num(s)?, num(s)?),
    };
    if start == 0 || end < start {
        return Err(format!("width range `{s}` is empty"));
    }
    Ok(WidthRange { start, end })
}

fn parse_level(s: &str) -> Result<AnalysisLevel, String> {
    s.parse().map_err(|e: tocount_core::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<FloatFormat, String> {
    s.parse().map_err(|e: tocount_core::Error| e.to_string())
}

fn parse_activation(s: &str) -> Result<Activation, String> {
    s.trim()
        .parse()
        .map_err(|e: tocount_core::Error| e.to_string())
}

pub(crate) fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn open(path: &Path) -> CliResult<fs::File> {
    fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn context(path: &Path) -> String {
    path.display().to_string()
}

impl GlobalOpts {
    pub(crate) fn style(&self) -> NumberStyle {
        NumberStyle { raw: self.raw }
    }

    pub(crate) fn load_model(&self, path: &Path) -> CliResult<ModelSpec> {
        let model = ModelSpec::parse(&read_text(path)?).map_err(CliError::core(context(path)))?;
        Ok(match self.format {
            Some(fmt) => model.with_float_format(fmt),
            None => model,
        })
    }

    pub(crate) fn load_cost_table(&self) -> CliResult<CostTable> {
        match &self.cost_table {
            Some(path) => {
                CostTable::parse(&read_text(path)?).map_err(CliError::core(context(path)))
            }
            None => Ok(CostTable::default()),
        }
    }
}

/// Runs a parsed invocation, writing the primary output to `--out` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let text = commands::dispatch(cli)?;
    match &cli.global.out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

/// Parses `args` (program name first) and runs; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn width_ranges() {
        assert_eq!(
            parse_widths("4..13").unwrap(),
            WidthRange { start: 4, end: 13 }
        );
        assert_eq!(parse_widths("4..=13").unwrap().iter().count(), 10);
        assert_eq!(
            parse_widths("7").unwrap().iter().collect::<Vec<_>>(),
            vec![7]
        );
        assert!(parse_widths("13..4").is_err());
        assert!(parse_widths("0..3").is_err());
        assert!(parse_widths("a..b").is_err());
    }

    #[test]
    fn exit_codes() {
        let unsupported = CliError::Core {
            context: "m".into(),
            source: tocount_core::Error::Unsupported("conv".into()),
        };
        assert_eq!(unsupported.exit_code(), EXIT_UNSUPPORTED);
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_INPUT);
    }
}
