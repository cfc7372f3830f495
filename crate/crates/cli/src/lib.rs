//! Command-line front end for `reuse_risk`.
//!
//! [`parse_and_validate`] turns an argument vector (plus an optional TOML
//! config file) into a [`RunConfig`]; [`execute`] runs it and returns the
//! report. [`run`] wires both to output streams and exit codes.

pub mod commands;
pub mod params;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use reuse_risk::report::{OutputFormat, Report};

use commands::{schema, Command, Job};
use params::{toml_to_string, Fields, ParamMap};

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Obj,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Obj => OutputFormat::Obj,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "reuse-risk", version, about = "Risk analysis for dependent errors caused by data reuse")]
pub struct Cli {
    /// Master seed for every random stream [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format [default: csv]
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Write the report here instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with a [command] section of default parameters
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: &'static str,
    /// Merged raw parameters, flags over config values.
    pub params: ParamMap,
    pub seed: Option<u64>,
    pub format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub job: Job,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// `--help` or `--version` text; not a failure.
    Info(String),
    /// Malformed command line or unreadable config; carries clap's rendering.
    Usage(String),
    /// Every parameter problem found.
    Validation(Vec<String>),
    /// The analysis itself failed.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Usage(_) | CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Info(msg) | CliError::Usage(msg) => write!(f, "{}", msg.trim_end()),
            CliError::Validation(errs) => {
                write!(f, "error: invalid parameters:")?;
                for e in errs {
                    write!(f, "\n  - {e}")?;
                }
                Ok(())
            }
            CliError::Runtime(msg) => write!(f, "error: {msg}"),
        }
    }
}

/// Global settings and the command section read from a config file.
#[derive(Debug, Default)]
struct FileConfig {
    seed: Option<u64>,
    format: Option<OutputFormat>,
    out: Option<PathBuf>,
    params: ParamMap,
}

fn load_config(path: &Path, command: &str, errors: &mut Vec<String>) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("error: cannot read config {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Validation(vec![format!("config {}: {e}", path.display())]))?;
    let schema = schema();
    let mut out = FileConfig::default();
    for (key, value) in &table {
        match (key.as_str(), value) {
            ("seed", toml::Value::Integer(i)) if *i >= 0 => out.seed = Some(*i as u64),
            ("seed", v) => errors.push(format!("config `seed` must be a non-negative integer, got {v}")),
            ("format", toml::Value::String(s)) if s == "csv" => out.format = Some(OutputFormat::Csv),
            ("format", toml::Value::String(s)) if s == "obj" => out.format = Some(OutputFormat::Obj),
            ("format", v) => errors.push(format!("config `format` must be \"csv\" or \"obj\", got {v}")),
            ("out", toml::Value::String(s)) => out.out = Some(PathBuf::from(s)),
            ("out", v) => errors.push(format!("config `out` must be a path string, got {v}")),
            (section, toml::Value::Table(entries)) => {
                let Some((_, keys)) = schema.iter().find(|(name, _)| *name == section) else {
                    errors.push(format!("unknown config section [{section}]"));
                    continue;
                };
                for (k, v) in entries {
                    if !keys.contains(k) {
                        errors.push(format!("unknown key `{k}` in config section [{section}]"));
                    } else if let Some(s) = toml_to_string(v) {
                        if section == command {
                            out.params.insert(k.clone(), s);
                        }
                    } else {
                        errors.push(format!("config key `{k}` in [{section}] must be a scalar or a list of scalars"));
                    }
                }
            }
            (other, _) => errors.push(format!("unknown config key `{other}`")),
        }
    }
    Ok(out)
}

/// Parses flags, merges the config file underneath them and validates the
/// result, reporting every violation at once.
pub fn parse_and_validate<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        let text = e.render().to_string();
        match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Info(text),
            _ => CliError::Usage(text),
        }
    })?;
    let command = cli.command.name();
    let mut errors = Vec::new();
    let file = match &cli.config {
        Some(path) => load_config(path, command, &mut errors)?,
        None => FileConfig::default(),
    };
    let mut params = file.params;
    params.extend(cli.command.given());

    let mut fields = Fields::new(&params);
    let job = Job::build(command, &mut fields);
    errors.extend(fields.into_errors());
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    Ok(RunConfig {
        command,
        seed: cli.seed.or(file.seed),
        format: cli.format.map(Into::into).or(file.format).unwrap_or(OutputFormat::Csv),
        output_path: cli.out.or(file.out),
        params,
        job,
    })
}

/// Runs the command and renders its report.
pub fn execute(cfg: &RunConfig) -> Result<String, CliError> {
    let report: Report = cfg
        .job
        .execute(cfg.seed.unwrap_or(DEFAULT_SEED))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(report.render(cfg.format))
}

/// Full pipeline; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_and_validate(args).and_then(|cfg| {
        let text = execute(&cfg)?;
        match &cfg.output_path {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
            None => stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Runtime(format!("cannot write output: {e}"))),
        }
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Info(msg)) => {
            let _ = stdout.write_all(msg.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

