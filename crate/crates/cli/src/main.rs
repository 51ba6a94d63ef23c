//! `parallax`: command-line pipelines for planar-parallax depth geometry.
//!
//! Each command prints `key=value` lines followed by one JSON object line on
//! stdout. Failures print `error[<category>]: <message>` on stderr and exit
//! with status 1; malformed command lines exit with status 2.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod inputs;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parallax_core::io::read_config;
use parallax_core::Error;

use commands::Context;

#[derive(Debug, Parser)]
#[command(
    name = "parallax",
    version,
    about = "Planar-parallax depth geometry toolkit"
)]
struct Cli {
    /// Tool configuration (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for every random choice (RANSAC sampling, flow noise).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic scene and write its oracle rasters.
    Synth(commands::SynthArgs),
    /// Plane-homography warp of a depth map with alignment statistics.
    Warp(commands::WarpArgs),
    /// RANSAC ground plane from a depth map.
    FitPlane(commands::FitPlaneArgs),
    /// Average plane over many plane files.
    MeanPlane(commands::MeanPlaneArgs),
    /// Point-to-plane ICP refinement of a relative motion.
    IcpRefine(commands::IcpArgs),
    /// Recover gamma from residual flow.
    #[command(name = "flow2gamma")]
    FlowToGamma(commands::FlowToGammaArgs),
    /// Convert gamma to depth.
    #[command(name = "gamma2depth")]
    GammaToDepth(commands::GammaToDepthArgs),
    /// Depth metrics against ground truth.
    Eval(commands::EvalArgs),
    /// Gamma, SILog and total losses.
    Loss(commands::LossArgs),
}

fn run(cli: &Cli) -> parallax_core::Result<report::Report> {
    let ctx = Context {
        config: read_config(cli.config.as_deref())?,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Synth(a) => commands::synth(a, &ctx),
        Command::Warp(a) => commands::warp(a, &ctx),
        Command::FitPlane(a) => commands::fit_plane(a, &ctx),
        Command::MeanPlane(a) => commands::mean_plane_cmd(a, &ctx),
        Command::IcpRefine(a) => commands::icp_refine(a, &ctx),
        Command::FlowToGamma(a) => commands::flow_to_gamma(a, &ctx),
        Command::GammaToDepth(a) => commands::gamma_to_depth_cmd(a, &ctx),
        Command::Eval(a) => commands::eval(a, &ctx),
        Command::Loss(a) => commands::loss(a, &ctx),
    }
}

fn hint(err: &Error) -> Option<&'static str> {
    match err {
        Error::LateralMotion { .. } => Some(
            "gamma recovery skipped: with t_z = 0 the residual flow is parallel to the \
             camera translation and carries no epipole, so gamma cannot be recovered \
             from it; use synth's gamma.ras or a motion with a forward component",
        ),
        _ => None,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(report.render().as_bytes()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error[{}]: {err}", err.category());
            if let Some(note) = hint(&err) {
                eprintln!("note: {note}");
            }
            ExitCode::FAILURE
        }
    }
}
