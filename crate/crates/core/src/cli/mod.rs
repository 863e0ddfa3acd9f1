//! Command-line front end: `simulate`, `fit`, `forecast` and `evaluate`.

pub mod commands;
pub mod config;
pub mod io;
pub mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand};

pub use commands::{cmd_evaluate, cmd_fit, cmd_forecast, cmd_simulate};
pub use config::{ConfigError, Overrides, RunConfig};
pub use store::{ModelStore, StoreError};

use crate::pipeline::{Cadence, Variant};

#[derive(Debug, Parser)]
#[command(name = "loadcurve", version, about = "Hybrid trend plus curve-regression load forecaster")]
pub struct Cli {
    /// Scenario seed, overriding `scenario.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Threads used to fit class-pair models.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Regressor variant (H1, H2, H3 or H4).
    #[arg(long, global = true)]
    pub variant: Option<Variant>,
    /// Trend preset (trend1 or trend2).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Refit cadence (daily, weekly or once).
    #[arg(long, global = true)]
    pub cadence: Option<Cadence>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic load, weather and holiday history plus its ground truth.
    Simulate {
        config: PathBuf,
    },
    /// Fit the trend and class-pair models on history before `evaluation.start`.
    Fit {
        config: PathBuf,
    },
    /// Forecast a range of issue dates and run the training-window audit.
    Forecast {
        config: PathBuf,
        /// First issue date (default `evaluation.start`).
        #[arg(long)]
        from: Option<NaiveDate>,
        /// Last issue date (default `evaluation.end`).
        #[arg(long)]
        to: Option<NaiveDate>,
        /// Days per forecast chain (default `evaluation.horizon`).
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Score a forecast CSV against actual loads.
    Evaluate {
        /// Config supplying default paths.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "config")]
        forecast: Option<PathBuf>,
        #[arg(long, required_unless_present = "config")]
        actual: Option<PathBuf>,
        /// Report directory.
        #[arg(long, required_unless_present = "config")]
        out: Option<PathBuf>,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            workers: self.workers,
            variant: self.variant,
            preset: self.preset.clone(),
            cadence: self.cadence,
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ov = cli.overrides();
    match cli.command {
        Command::Simulate { config } => {
            let cfg = RunConfig::load(&config, &ov)?;
            let out = cmd_simulate(&cfg)?;
            println!(
                "wrote {} load rows to {}, weather to {}, holidays to {}, ground truth to {}",
                out.rows,
                out.load.display(),
                out.weather.display(),
                out.holidays.display(),
                out.truth.display()
            );
        }
        Command::Fit { config } => {
            let cfg = RunConfig::load(&config, &ov)?;
            let out = cmd_fit(&cfg)?;
            println!(
                "fitted trend on {} weeks and {} class-pair models ({} pairs without a model) before {}; store {}",
                out.gam_weeks,
                out.models,
                out.absent,
                out.cutoff,
                out.store.display()
            );
        }
        Command::Forecast {
            config,
            from,
            to,
            horizon,
        } => {
            let cfg = RunConfig::load(&config, &ov)?;
            let from = from.map_or_else(|| cfg.eval_start(), Ok)?;
            let to = to.map_or_else(|| cfg.eval_end(), Ok)?;
            let horizon = horizon.unwrap_or(cfg.evaluation.horizon);
            let out = cmd_forecast(&cfg, from, to, horizon)?;
            let fallbacks = out.results.iter().filter(|r| r.fallback).count();
            println!(
                "wrote {} forecast rows ({} fallback) to {}",
                commands::forecast_rows(&out.results),
                fallbacks,
                out.forecast.display()
            );
            println!(
                "audit: {} training-window violations ({})",
                out.violations.len(),
                out.audit.display()
            );
            anyhow::ensure!(out.violations.is_empty(), "training-window audit failed");
        }
        Command::Evaluate {
            config,
            forecast,
            actual,
            out,
        } => {
            let cfg = config.map(|c| RunConfig::load(&c, &ov)).transpose()?;
            let pick = |given: Option<PathBuf>, default: fn(&RunConfig) -> PathBuf| {
                given
                    .or_else(|| cfg.as_ref().map(default))
                    .context("path not given")
            };
            let forecast = pick(forecast, |c| c.paths.forecast_csv())?;
            let actual = pick(actual, |c| c.paths.load.clone())?;
            let out = pick(out, |c| c.paths.output.clone())?;
            let report = cmd_evaluate(&forecast, &actual, &out)?;
            print!("{}", report.table);
        }
    }
    Ok(())
}

/// Entry point for the binary: parse arguments, run, map errors to exit code 1.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
