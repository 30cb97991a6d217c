//! Argument parsing and dispatch.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use acw_core::catalog::FIXTURES;
use clap::{Args as ClapArgs, Parser, Subcommand};

use crate::config::{Format, JobConfig};
use crate::error::CliError;
use crate::run::{run, Job};

#[derive(Debug, Parser)]
#[command(name = "acw", version, about = "Verify Lie algebroid gauge data and emit reports")]
pub struct Args {
    /// Report format; overrides the config file.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Sampling seed; overrides the config file.
    #[arg(long, global = true, env = "ACW_SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Nilpotency of the Chevalley-Eilenberg differential.
    Validate(Target),
    /// Adjustment tiers (plain, covariant, strict) and the ∇^ζ cross-check.
    Adjust(Target),
    /// Gauge variations, covariance of the curvature and the Bianchi identities.
    Gauge(Target),
    /// Closure of the gauge algebra.
    Closure(Target),
    /// Cocycle and gluing conditions on a cover.
    Cocycle(Target),
    /// Chern number of a bundle over S².
    Chern(Target),
    /// Numeric evaluation of every residual family at seeded sample points.
    SpotCheck(Target),
    /// Runs the checks listed in the config, or every applicable check.
    Check {
        #[command(flatten)]
        target: Target,
        /// Run every applicable check regardless of the config's list.
        #[arg(long)]
        all: bool,
    },
    /// Lists catalog fixtures and their parameters.
    ListFixtures,
}

#[derive(Debug, ClapArgs)]
pub struct Target {
    /// Catalog fixture name.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub fixture: Option<String>,
    /// Job config file (JSON, or TOML with a `.toml` extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fixture parameter `key=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param, requires = "fixture")]
    pub params: Vec<(String, String)>,
    /// Shorthand for `--param n=<N>`.
    #[arg(long, allow_hyphen_values = true, requires = "fixture")]
    pub n: Option<i64>,
}

fn parse_param(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

impl Command {
    fn group(&self) -> Option<&'static str> {
        Some(match self {
            Command::Validate(_) => "nilpotency",
            Command::Adjust(_) => "adjust",
            Command::Gauge(_) => "gauge",
            Command::Closure(_) => "closure",
            Command::Cocycle(_) => "cocycle",
            Command::Chern(_) => "chern",
            Command::SpotCheck(_) => "spot_check",
            Command::Check { .. } | Command::ListFixtures => return None,
        })
    }

    fn target(&self) -> Option<&Target> {
        match self {
            Command::Validate(t)
            | Command::Adjust(t)
            | Command::Gauge(t)
            | Command::Closure(t)
            | Command::Cocycle(t)
            | Command::Chern(t)
            | Command::SpotCheck(t) => Some(t),
            Command::Check { target, .. } => Some(target),
            Command::ListFixtures => None,
        }
    }
}

fn list_fixtures() -> String {
    let mut s = String::new();
    for (name, params, about) in FIXTURES {
        let params = if params.is_empty() { String::new() } else { format!(" [{params}]") };
        s.push_str(&format!("{name}{params}\n    {about}\n"));
    }
    s
}

/// Builds the job described by the arguments.
pub fn job(args: &Args) -> Result<(Job, Format), CliError> {
    let target = args.command.target().ok_or_else(|| CliError::config("command takes no input"))?;
    let (mut job, config_format) = match (&target.fixture, &target.config) {
        (Some(name), None) => {
            let mut params: BTreeMap<String, String> = target.params.iter().cloned().collect();
            if let Some(n) = target.n {
                params.insert("n".into(), n.to_string());
            }
            (Job::from_fixture(name, &params)?, None)
        }
        (None, Some(path)) => {
            let (cfg, bytes) = JobConfig::load(path)?;
            let format = cfg.format;
            (Job::from_config(cfg, &path.display().to_string(), &bytes)?, format)
        }
        _ => return Err(CliError::config("exactly one of --fixture and --config is required")),
    };
    if let Some(seed) = args.seed {
        job.seed = seed;
    }
    match &args.command {
        Command::Check { all: true, .. } => job.checks.clear(),
        Command::Check { .. } => {}
        cmd => job.checks = cmd.group().into_iter().map(String::from).collect(),
    }
    if let Command::Chern(_) = args.command {
        job.checks.insert(0, "cocycle".into());
    }
    Ok((job, args.format.or(config_format).unwrap_or_default()))
}

fn emit(args: &Args, text: &str) -> Result<(), CliError> {
    match &args.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Runs the command and returns the process exit status. Errors mean the job
/// could not be set up (status 2).
pub fn execute(args: &Args) -> Result<u8, CliError> {
    if let Command::ListFixtures = args.command {
        emit(args, &list_fixtures())?;
        return Ok(0);
    }
    let (job, format) = job(args)?;
    let report = run(&job)?;
    let mut text = match format {
        Format::Json => report.to_json(),
        Format::Markdown => report.to_markdown(),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    emit(args, &text)?;
    Ok(report.exit_code() as u8)
}
