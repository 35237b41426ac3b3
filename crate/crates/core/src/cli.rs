//! Command-line front end. Each subcommand runs one study from a JSON config
//! (defaults when `--config` is absent), writes report files and prints one
//! `key=value` summary line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error,
//! 3 solver non-convergence.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::experiments::{self, emit_report, ExperimentConfig, ExperimentReport, OutputFormat, StudyTag};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "anisocs", version, about = "Anisotropic compressed sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Coherence weights, decay fit and the M~ table.
    Coherence,
    /// Draw sampling patterns and the log-scheme comparison.
    Sample,
    /// Seeded recoveries at one (m, s).
    Recover,
    /// Success-rate sweep over budgets and sparsities.
    Phase,
    /// Golfing dual certificates and their checks.
    Certificate,
    /// Perturbed-Fourier frame against the plain DFT.
    EitDemo,
    /// Exhaustive with/without-replacement ratio check.
    ReplacementCheck,
}

impl Command {
    fn study(self) -> StudyTag {
        match self {
            Command::Coherence => StudyTag::Coherence,
            Command::Sample => StudyTag::Sample,
            Command::Recover => StudyTag::Recover,
            Command::Phase => StudyTag::Phase,
            Command::Certificate => StudyTag::Certificate,
            Command::EitDemo => StudyTag::EitDemo,
            Command::ReplacementCheck => StudyTag::ReplacementCheck,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum FormatArg {
    Json,
    Csv,
    Svg,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for report files.
    #[arg(long, global = true, value_name = "DIR", default_value = "anisocs-out")]
    out: PathBuf,
    /// Override the config's master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Output format; repeat for several.
    #[arg(long = "format", global = true, value_enum)]
    formats: Vec<FormatArg>,
}

/// A validated command line with its fully resolved config.
#[derive(Clone, Debug, PartialEq)]
pub struct CliInvocation {
    pub study: StudyTag,
    pub config_path: Option<PathBuf>,
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub jobs: Option<usize>,
    pub formats: Vec<OutputFormat>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Usage text or help; `code` is clap's exit code (0 for help).
    #[error("{message}")]
    Usage { message: String, code: i32 },
    #[error(transparent)]
    Config(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { code, .. } => *code,
            CliError::Config(_) => EXIT_USAGE,
        }
    }
}

pub fn parse_args<I, T>(argv: I) -> Result<CliInvocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage {
        message: e.render().to_string(),
        code: e.exit_code(),
    })?;
    let common = cli.common;
    let mut config = match &common.config {
        Some(path) => {
            if !path.is_file() {
                return Err(CliError::Usage {
                    message: format!("config file {} does not exist", path.display()),
                    code: EXIT_USAGE,
                });
            }
            ExperimentConfig::from_path(path).map_err(CliError::Config)?
        }
        None => ExperimentConfig::default(),
    };
    config.study = cli.command.study();
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if common.jobs == Some(0) {
        return Err(CliError::Usage {
            message: "--jobs must be at least 1".into(),
            code: EXIT_USAGE,
        });
    }
    let mut formats: Vec<OutputFormat> = common
        .formats
        .iter()
        .map(|f| match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Svg => OutputFormat::Svg,
        })
        .collect();
    if formats.is_empty() {
        formats.push(OutputFormat::Json);
    }
    Ok(CliInvocation {
        study: config.study,
        config_path: common.config,
        config,
        out_dir: common.out,
        jobs: common.jobs,
        formats,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_else(|| "none".into())
}

/// The stable one-line `key=value` summary of a report.
pub fn summary_line(report: &ExperimentReport) -> String {
    let mut parts = vec![format!("study={}", report.config.study.name())];
    let extra = |k: &str| report.extras.get(k).copied();
    match report.config.study {
        StudyTag::Coherence => {
            parts.push(format!("mu={}", fmt_opt(report.diagnostics.mu)));
            parts.push(format!("slope={}", fmt_opt(extra("slope"))));
            parts.push(format!("c1={}", fmt_opt(extra("c1"))));
            parts.push(format!(
                "decay_detected={}",
                report.diagnostics.decay_detected.unwrap_or(false)
            ));
        }
        StudyTag::ReplacementCheck => {
            parts.push(format!("min_ratio={}", fmt_opt(extra("min_ratio"))));
            parts.push(format!("cases={}", fmt_opt(extra("cases"))));
            parts.push(format!("all_at_least_half={}", extra("all_at_least_half") == Some(1.0)));
        }
        StudyTag::Sample => {
            parts.push(format!("patterns={}", report.patterns.len()));
            for p in &report.patterns {
                parts.push(format!("{:?}_distinct={}", p.scheme, p.distinct().len()).to_lowercase());
            }
        }
        StudyTag::Certificate => {
            parts.push(format!("trials={}", report.trials.len()));
            parts.push(format!("found_rate={}", fmt_opt(extra("found_rate"))));
            parts.push(format!("found_and_passed={}", fmt_opt(extra("found_and_passed"))));
        }
        StudyTag::EitDemo => {
            parts.push(format!("bounds_ok={}", extra("bounds_ok") == Some(1.0)));
            parts.push(format!("u_minus_f={}", fmt_opt(extra("u_minus_f"))));
            for a in &report.aggregates {
                parts.push(format!("rate[{},s={},m={}]={}", a.arm, a.s, a.m, a.success_rate));
            }
        }
        StudyTag::Phase | StudyTag::Recover => {
            parts.push(format!("trials={}", report.trials.len()));
            parts.push(format!("success_rate={}", fmt_opt(report.overall_success_rate())));
            parts.push(format!("converged={}", report.all_converged()));
        }
    }
    parts.join(" ")
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NotConverged { .. } => "not_converged",
        Error::Config { .. } => "config",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        _ => "runtime",
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::Config { .. } => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn report_error(e: &Error) -> i32 {
    let record = serde_json::json!({ "error": error_kind(e), "message": e.to_string() });
    eprintln!("{record}");
    error_code(e)
}

/// Runs the invocation, writes `config.json` plus the requested report
/// files, prints the summary and returns the exit code. A recover run with a
/// non-converged trial still writes its report and exits with 3.
pub fn dispatch(inv: &CliInvocation) -> i32 {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = inv.jobs {
        builder = builder.num_threads(j);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": "runtime", "message": e.to_string() }));
            return EXIT_RUNTIME;
        }
    };
    let report = match pool.install(|| experiments::run(&inv.config)) {
        Ok(r) => r,
        Err(e) => return report_error(&e),
    };
    let write = || -> crate::Result<()> {
        std::fs::create_dir_all(&inv.out_dir)?;
        std::fs::write(
            inv.out_dir.join("config.json"),
            serde_json::to_string_pretty(&report.config)?,
        )?;
        emit_report(&report, &inv.out_dir, &inv.formats)?;
        Ok(())
    };
    if let Err(e) = write() {
        return report_error(&e);
    }
    println!("{}", summary_line(&report));
    if inv.study == StudyTag::Recover && !report.all_converged() {
        let iterations = report.trials.iter().map(|t| t.iterations).max().unwrap_or(0);
        return report_error(&Error::NotConverged { iterations });
    }
    EXIT_OK
}

/// Parse, run and map everything to an exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(inv) => dispatch(&inv),
        Err(CliError::Usage { message, code }) => {
            if code == EXIT_OK {
                print!("{message}");
            } else {
                eprint!("{message}");
            }
            code
        }
        Err(CliError::Config(e)) => report_error(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subcommand_sets_study() {
        let inv = parse_args(["anisocs", "coherence"]).unwrap();
        assert_eq!(inv.study, StudyTag::Coherence);
        assert_eq!(inv.formats, vec![OutputFormat::Json]);
    }

    #[test]
    fn unknown_subcommand_is_usage() {
        let e = parse_args(["anisocs", "frobnicate"]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
        let e = parse_args(["anisocs", "phase", "--bogus"]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn missing_config_is_usage() {
        let e = parse_args(["anisocs", "phase", "--config", "/nonexistent/x.json"]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn seed_and_formats() {
        let inv = parse_args([
            "anisocs", "phase", "--seed", "42", "--format", "csv", "--format", "svg", "--jobs", "2",
        ])
        .unwrap();
        assert_eq!(inv.config.seed, 42);
        assert_eq!(inv.formats, vec![OutputFormat::Csv, OutputFormat::Svg]);
        assert_eq!(inv.jobs, Some(2));
    }
}
