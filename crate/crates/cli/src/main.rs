#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xlmimo_core::beamfocus::GainMode;
use xlmimo_core::units::Length;

use commands::{GainMapArgs, Outcome, ValidateArgs};
use config::ParamArgs;

/// Near-field XL-MIMO channel simulator.
///
/// Lengths accept a `lambda` suffix (wavelength multiples) or a `threshold`
/// suffix (multiples of the spacing threshold). Plain numbers are meters.
#[derive(Debug, Parser)]
#[command(name = "xlmimo", version)]
struct Cli {
    #[command(flatten)]
    params: ParamArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spacing threshold sqrt(lambda L / sqrt(N)) and the paraxial parameter
    Threshold,
    /// DoF, effective DoF and capacity for one configuration
    Report {
        /// Print JSON instead of text
        #[arg(long)]
        json: bool,
    },
    /// Run a preset (fig2, fig3, fig5, ...) or a spec file; writes CSV plus a JSON sidecar
    Sweep {
        target: String,
        #[arg(long)]
        max_points: Option<usize>,
    },
    /// Array gain around the focus on the receive plane
    Gainmap {
        /// Probes per axis
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Half width of the probed square (default: twice the spacing)
        #[arg(long)]
        half_width: Option<Length>,
        /// exact, phase_only or fresnel; repeatable (default: all)
        #[arg(long = "mode")]
        modes: Vec<GainMode>,
    },
    /// Closed-form nearest-neighbor gain against the phase-only sum
    Validate {
        /// Antennas per side to check (default: --side-count)
        #[arg(long, value_delimiter = ',')]
        sides: Vec<usize>,
        /// Explicit spacing grid (default: --start to the threshold in --step increments)
        #[arg(long, value_delimiter = ',')]
        spacings: Vec<Length>,
        #[arg(long, default_value = "2lambda")]
        start: Length,
        #[arg(long, default_value = "0.5lambda")]
        step: Length,
    },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Threshold => commands::threshold(&config::load(&cli.params)?),
        Command::Report { json } => commands::report(&config::load(&cli.params)?, json),
        Command::Sweep { target, max_points } => {
            let output = match (&cli.params.output, &cli.params.config) {
                (Some(out), _) => Some(out.clone()),
                (None, Some(path)) => config::RunConfig::load(path)?.output_path,
                (None, None) => None,
            };
            commands::sweep(&target, output, max_points)
        }
        Command::Gainmap {
            points,
            half_width,
            modes,
        } => commands::gainmap(
            &config::load(&cli.params)?,
            &GainMapArgs {
                points,
                half_width,
                modes,
            },
        ),
        Command::Validate {
            sides,
            spacings,
            start,
            step,
        } => commands::validate(
            &config::load(&cli.params)?,
            &ValidateArgs {
                sides,
                spacings,
                start,
                step,
            },
        ),
    }
}

/// 2 for numerical failures, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|cause| {
        cause
            .downcast_ref::<xlmimo_core::Error>()
            .is_some_and(|e| e.is_numerical())
    });
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
