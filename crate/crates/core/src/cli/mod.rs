//! Command-line front end. `run_from_args` never panics on bad input and
//! returns the process exit code.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use commands::Scenario;
pub use config::{Model, RunConfig};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ASSUMPTION: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "delegate",
    version,
    about = "Delegated persuasion: MIC families, certificates and an LP oracle"
)]
pub struct Cli {
    /// JSON run configuration; the built-in uniform / Beta(2, 2) run when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Oracle grid size; overrides `oracle.n`.
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
    /// Oracle scenario: uninformed_dm or m_shaped.
    #[arg(long, global = true, value_name = "NAME")]
    pub scenario: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Upper-censorship threshold and atom under full delegation.
    FullDelegation,
    /// Sweep of the MIC family over its feasible top atoms.
    MicSweep,
    /// Designer-optimal member of the MIC family.
    Optimize,
    /// Certificate and oracle verification battery.
    Verify,
    /// LP best reply on the discretized prior.
    Oracle,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io(_) => EXIT_CONFIG,
        Error::Assumption { .. } | Error::NotSShaped(_) => EXIT_ASSUMPTION,
        _ => EXIT_VERIFICATION,
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.grid {
        config.oracle.n = n;
        config.validate()?;
    }
    Ok(config)
}

fn resolve_out(cli: &Cli, config: &RunConfig) -> Result<PathBuf> {
    let dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn print_json<T: Serialize>(value: &T) {
    match serde_json::to_string_pretty(value) {
        Ok(text) => println!("{text}"),
        Err(e) => eprintln!("error: cannot serialize report: {e}"),
    }
}

/// Runs a parsed command; `Ok(false)` means a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let config = resolve_config(cli)?;
    let scenario = cli
        .scenario
        .as_deref()
        .map(str::parse::<Scenario>)
        .transpose()?;
    if scenario.is_some() && !matches!(cli.command, Command::Verify | Command::Oracle) {
        return Err(Error::Config(
            "--scenario applies only to verify and oracle".into(),
        ));
    }
    let out = resolve_out(cli, &config)?;
    let out: Option<&Path> = Some(&out);
    match cli.command {
        Command::FullDelegation => {
            let r = commands::full_delegation(&config, out)?;
            print_json(&r);
            Ok(r.root_sign_changes == 1)
        }
        Command::MicSweep => {
            let r = commands::mic_sweep(&config, out)?;
            print_json(&r.range);
            Ok(r.range.is_interval)
        }
        Command::Optimize => {
            let r = commands::optimize_cmd(&config, out)?;
            print_json(&r);
            Ok(r.certificate.ok() && r.gain_over_full_delegation >= 0.0)
        }
        Command::Verify => {
            let r = commands::verify(&config, scenario, out)?;
            for c in &r.checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(r.all_passed)
        }
        Command::Oracle => {
            let r = commands::oracle(&config, scenario, out)?;
            print_json(&r);
            Ok(r.scenario.as_ref().is_none_or(|s| s.passed))
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("error: verification failed");
            EXIT_VERIFICATION
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_are_config_errors() {
        assert_eq!(run_from_args(["delegate"]), EXIT_CONFIG);
        assert_eq!(run_from_args(["delegate", "bogus"]), EXIT_CONFIG);
        assert_eq!(
            run_from_args(["delegate", "oracle", "--grid", "abc"]),
            EXIT_CONFIG
        );
        assert_eq!(run_from_args(["delegate", "--help"]), EXIT_OK);
    }

    #[test]
    fn error_mapping() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(
            exit_code(&Error::Assumption { margin: -0.1 }),
            EXIT_ASSUMPTION
        );
        assert_eq!(exit_code(&Error::NotSShaped("x".into())), EXIT_ASSUMPTION);
        assert_eq!(exit_code(&Error::Numeric("x".into())), EXIT_VERIFICATION);
    }

    #[test]
    fn scenario_names_parse() {
        assert_eq!("m_shaped".parse::<Scenario>().unwrap(), Scenario::MShaped);
        assert_eq!(
            "uninformed_dm".parse::<Scenario>().unwrap(),
            Scenario::UninformedDm
        );
        assert!("other".parse::<Scenario>().is_err());
    }
}
