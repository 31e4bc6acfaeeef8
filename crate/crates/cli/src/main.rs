//! `ambiform`: solve ambiguity-aware beamforming scenarios and write CSV,
//! SVG and JSON artifacts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure,
//! 4 infeasible where a feasible design was required. Failures print a
//! JSON record `{code, kind, message}` on stderr.

mod commands;
mod config;
mod failure;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use ambiform::GraphKind;
use clap::{Parser, Subcommand, ValueEnum};

use commands::{Output, TradeoffArgs, WaveformArgs};
use failure::Failure;

#[derive(Parser)]
#[command(version, about = "Ambiguity-aware MIMO radar beamforming and data association")]
struct Cli {
    /// Directory receiving the output artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Complete,
    Path,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the beamforming problem and report P, R and constraint residuals.
    Beamform {
        config: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Beam pattern of the optimal design over a 1 degree azimuth grid.
    Pattern {
        config: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Path-over-complete power gain ratio on uniform scenes with K = N.
    Powergain {
        #[arg(long, default_value_t = 3)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
    },
    /// Largest number of identifiable targets per array size.
    Identifiability {
        #[arg(long, value_enum, default_value = "both")]
        family: Family,
        /// Single array size; overrides the range.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
    },
    /// Threshold sweep of the power/association trade-off.
    Tradeoff {
        config: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate a single threshold instead of the full sweep.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Also evaluate every labeled graph on the targets.
        #[arg(long)]
        exhaustive: bool,
        /// Allow exhaustive enumeration beyond five targets.
        #[arg(long)]
        long_run: bool,
    },
    /// Generate random polyphase waveforms and check their ambiguity function.
    Waveform {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1000.0)]
        bandwidth: f64,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds to check.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        /// Sidelobe level as an amplitude.
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 10)]
        tau_subsample: usize,
        #[arg(long, default_value_t = 8)]
        omega_subsample: usize,
    },
    /// Matched filter, detection and association on the scenario.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = Output::new(&cli.out)?;
    match cli.command {
        Command::Beamform { config, gamma, delta } => commands::beamform(&config, gamma, delta, &out),
        Command::Pattern { config, gamma, delta } => commands::pattern(&config, gamma, delta, &out),
        Command::Powergain { n_min, n_max } => commands::powergain(n_min, n_max, &out),
        Command::Identifiability {
            family,
            n,
            n_min,
            n_max,
        } => {
            let families: &[GraphKind] = match family {
                Family::Complete => &[GraphKind::Complete],
                Family::Path => &[GraphKind::Path],
                Family::Both => &[GraphKind::Complete, GraphKind::Path],
            };
            let (lo, hi) = n.map_or((n_min, n_max), |n| (n, n));
            commands::identifiability_table(families, lo, hi, &out)
        }
        Command::Tradeoff {
            config,
            samples,
            seed,
            gamma,
            delta,
            exhaustive,
            long_run,
        } => commands::tradeoff(
            &config,
            &TradeoffArgs {
                samples,
                seed,
                gamma,
                delta,
                exhaustive,
                long_run,
            },
            &out,
        ),
        Command::Waveform {
            n,
            bandwidth,
            duration,
            seed,
            seeds,
            delta,
            tau_subsample,
            omega_subsample,
        } => commands::waveform(
            &WaveformArgs {
                n,
                bandwidth,
                duration,
                seed,
                seeds,
                delta,
                tau_subsample,
                omega_subsample,
            },
            &out,
        ),
        Command::Simulate {
            config,
            gamma,
            delta,
            seed,
        } => commands::simulate(&config, gamma, delta, seed, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", serde_json::to_string(&f).expect("failure records serialize"));
            ExitCode::from(f.code)
        }
    }
}
