//! Command-line front end for `agnlab-core`: rates, figure data, the
//! fragility table, parameter sweeps and the asymptotic rate.

pub mod commands;
pub mod config;
pub mod output;


use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Report;
use crate::config::{ConfigError, RunConfig};

pub use crate::config::CONFIG_ENV;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "agnlab", version, about = "Feedback coding rates over AR(1) Gaussian noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve one problem (b1, b2, p1, p2) and print the per-step trace.
    Rate,
    /// Gains of B2 and P2 side by side.
    Fig2,
    /// Rates of B2, P2 and the asymptote.
    Fig3,
    /// Perturbation amplification by the B2 gains.
    Fragility,
    /// Rates over a grid of one parameter.
    Sweep,
    /// Asymptotic gain ratio and rate.
    Asymptote,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Configuration file; falls back on $AGNLAB_CONFIG.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Horizon (number of channel uses).
    #[arg(long, global = true)]
    pub n: Option<String>,
    /// AR(1) noise pole.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Innovation variance of the noise.
    #[arg(long, global = true)]
    pub kw: Option<String>,
    /// Message variance.
    #[arg(long, global = true)]
    pub ktheta: Option<String>,
    /// Variance of the first noise sample.
    #[arg(long, global = true)]
    pub kv1: Option<String>,
    /// Power per channel use.
    #[arg(long, global = true)]
    pub kappa: Option<String>,
    /// total | pointwise
    #[arg(long, global = true)]
    pub constraint: Option<String>,
    /// none | known
    #[arg(long, global = true)]
    pub state: Option<String>,
    /// Monte Carlo trials.
    #[arg(long, global = true)]
    pub trials: Option<String>,
    /// RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Perturbation magnitude for fragility.
    #[arg(long, global = true)]
    pub eps: Option<String>,
    /// csv | json
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<String>,
    /// b1 | b2 | p1 | p2
    #[arg(long, global = true)]
    pub problem: Option<String>,
    /// Sweep parameter: c | kappa | kw | n
    #[arg(long, global = true)]
    pub param: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Comma-separated problems for sweep.
    #[arg(long, global = true)]
    pub problems: Option<String>,
    /// Comma-separated horizons for fragility.
    #[arg(long = "n-list", global = true)]
    pub n_list: Option<String>,
    /// Comma-separated B2 horizons for fig3.
    #[arg(long = "b2-n", global = true)]
    pub b2_n: Option<String>,
    /// Comma-separated P2 horizons for fig3.
    #[arg(long = "p2-n", global = true)]
    pub p2_n: Option<String>,
    /// Random restarts for b1/p1 and the continuous p2 branch.
    #[arg(long, global = true)]
    pub restarts: Option<String>,
    /// Simplex iteration cap per run.
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<String>,
    /// Simplex and fixed-point tolerance.
    #[arg(long, global = true)]
    pub tol: Option<String>,
    /// Largest n for exhaustive p2.
    #[arg(long = "sign-limit", global = true)]
    pub sign_limit: Option<String>,
    /// both | exhaustive | continuous
    #[arg(long = "p2-branch", global = true)]
    pub p2_branch: Option<String>,
}

impl Flags {
    pub fn pairs(&self) -> Vec<(&'static str, &str)> {
        let all: [(&'static str, &Option<String>); 25] = [
            ("n", &self.n),
            ("c", &self.c),
            ("kw", &self.kw),
            ("ktheta", &self.ktheta),
            ("kv1", &self.kv1),
            ("kappa", &self.kappa),
            ("constraint", &self.constraint),
            ("state", &self.state),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("eps", &self.eps),
            ("format", &self.format),
            ("out", &self.out),
            ("problem", &self.problem),
            ("param", &self.param),
            ("grid", &self.grid),
            ("problems", &self.problems),
            ("n_list", &self.n_list),
            ("b2_n", &self.b2_n),
            ("p2_n", &self.p2_n),
            ("restarts", &self.restarts),
            ("max_iter", &self.max_iter),
            ("tol", &self.tol),
            ("sign_limit", &self.sign_limit),
            ("p2_branch", &self.p2_branch),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}

pub fn resolve_config(flags: &Flags, env_path: Option<&str>) -> Result<RunConfig, ConfigError> {
    RunConfig::layered(flags.config.as_deref(), env_path, &flags.pairs())
}

pub fn execute(command: Command, cfg: &RunConfig) -> anyhow::Result<Report> {
    match command {
        Command::Rate => commands::rate(cfg),
        Command::Fig2 => commands::fig2(cfg),
        Command::Fig3 => commands::fig3(cfg),
        Command::Fragility => commands::fragility(cfg),
        Command::Sweep => commands::sweep(cfg),
        Command::Asymptote => commands::asymptote(cfg),
    }
}

/// Parses `args` and runs the command, writing results to `out` (unless
/// `--out` is given) and diagnostics to `err`; returns the exit code.
pub fn main_with<I, T>(args: I, env_config: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, env_config, out, err),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_INVALID
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: &Cli, env_config: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let outcome = resolve_config(&cli.flags, env_config)
        .map_err(anyhow::Error::from)
        .and_then(|cfg| {
            let report = execute(cli.command, &cfg)?;
            emit(&cfg, &report, out)?;
            Ok(report)
        });
    match outcome {
        Ok(report) if report.converged => EXIT_OK,
        Ok(_) => {
            log::warn!("solver did not converge; results are partial");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

fn emit(cfg: &RunConfig, report: &Report, out: &mut dyn Write) -> anyhow::Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, &report.bytes)
            .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())).into()),
        None => {
            out.write_all(&report.bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    use agnlab_core::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::SigmaUnderflow { .. } | Error::BracketFailure(_)) => EXIT_NOT_CONVERGED,
        _ => EXIT_INVALID,
    }
}
