use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tiadc_cli::commands::{self, BerOptions, Context};
use tiadc_cli::config::RunConfig;
use tiadc_cli::grid::parse_grid;
use tiadc_core::comm::{Calibration, CodingMode};
use tiadc_core::{Error, Execution, Result};

#[derive(Parser)]
#[command(
    name = "tiadc",
    version,
    about = "TI-ADC mismatch tracking, reconstruction and BER experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; missing keys take the reference values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    /// Run in parallel; optional thread count (default: all cores).
    #[arg(long, num_args = 0..=1, default_missing_value = "0", value_name = "THREADS")]
    parallel: Option<usize>,
    /// psi^2 value or grid (start:step:stop or comma list).
    #[arg(long)]
    psi2: Option<String>,
    /// Q' level(s) in percent: 5, 10, 15.
    #[arg(long)]
    qprime: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Uncoded,
    Coded,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum CalibrationArg {
    On,
    Off,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Track the mismatches of one run and write the EKF trajectory.
    Estimate {
        #[command(flatten)]
        common: Common,
    },
    /// Track and reconstruct one run; write its NMSE.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Also write x, x_tilde and x_hat.
        #[arg(long)]
        dump_waveform: bool,
        /// Also write the high-pass and final fractional-delay taps.
        #[arg(long)]
        dump_filters: bool,
    },
    /// NMSE sweep over psi^2 and Q'.
    Fig2 {
        #[command(flatten)]
        common: Common,
    },
    /// BER sweep over E_b/N_0.
    Ber {
        #[command(flatten)]
        common: Common,
        /// E_b/N_0 grid in dB.
        #[arg(long)]
        ebno: Option<String>,
        /// Shorthand for `--mode coded`.
        #[arg(long, conflicts_with = "mode")]
        coded: bool,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum, default_value = "on")]
        calibration: CalibrationArg,
        /// Ideal sub-ADCs (no mismatch).
        #[arg(long)]
        mismatch_free: bool,
        #[arg(long)]
        max_bits: Option<u64>,
        #[arg(long)]
        min_errors: Option<u64>,
    },
    /// Run quick oracle checks.
    Selftest,
}

fn single(grid: &[f64], name: &'static str) -> Result<f64> {
    match grid {
        [v] => Ok(*v),
        _ => Err(Error::invalid(name, "this subcommand takes a single value")),
    }
}

fn grid_arg(s: &str, name: &'static str) -> Result<Vec<f64>> {
    parse_grid(s).map_err(|e| Error::invalid(name, e))
}

fn percents(values: &[f64]) -> Result<Vec<u32>> {
    values
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && v > 0.0 {
                Ok(v as u32)
            } else {
                Err(Error::invalid("qprime", format!("{v} is not a whole percentage")))
            }
        })
        .collect()
}

/// Loads the configuration and applies flag overrides. Grid flags set the
/// sweep grid for `fig2` and the single value otherwise.
fn context(common: &Common, sweep: bool) -> Result<Context> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
    }
    if let Some(s) = &common.psi2 {
        let g = grid_arg(s, "psi2")?;
        if sweep {
            cfg.psi2_grid = g;
        } else {
            cfg.psi2 = single(&g, "psi2")?;
        }
    }
    if let Some(s) = &common.qprime {
        let p = percents(&grid_arg(s, "qprime")?)?;
        if sweep {
            cfg.qprime_set = p;
        } else {
            cfg.qprime_pct = single(&p.iter().map(|&v| v as f64).collect::<Vec<_>>(), "qprime")? as u32;
        }
    }
    cfg.validate()?;
    let exec = match common.parallel {
        Some(threads) => Execution::Parallel { threads },
        None => Execution::Sequential,
    };
    Ok(Context {
        cfg,
        out: common.out.clone(),
        exec,
        command: std::env::args().skip(1).collect::<Vec<_>>().join(" "),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Estimate { common } => commands::estimate(&context(&common, false)?)?,
        Command::Reconstruct {
            common,
            dump_waveform,
            dump_filters,
        } => commands::reconstruct(&context(&common, false)?, dump_waveform, dump_filters)?,
        Command::Fig2 { common } => commands::fig2(&context(&common, true)?)?,
        Command::Ber {
            common,
            ebno,
            coded,
            mode,
            calibration,
            mismatch_free,
            max_bits,
            min_errors,
        } => {
            let mut ctx = context(&common, false)?;
            if let Some(s) = ebno {
                ctx.cfg.ebno_grid = grid_arg(&s, "ebno")?;
            }
            if let Some(b) = max_bits {
                ctx.cfg.max_bits = b;
            }
            if let Some(e) = min_errors {
                ctx.cfg.min_errors = e;
            }
            let mode = if coded {
                ModeArg::Coded
            } else {
                mode.unwrap_or(ModeArg::Uncoded)
            };
            let opts = BerOptions {
                modes: match mode {
                    ModeArg::Uncoded => vec![CodingMode::Uncoded],
                    ModeArg::Coded => vec![CodingMode::Coded],
                    ModeArg::Both => vec![CodingMode::Uncoded, CodingMode::Coded],
                },
                calibrations: match calibration {
                    CalibrationArg::On => vec![Calibration::On],
                    CalibrationArg::Off => vec![Calibration::Off],
                    CalibrationArg::Both => vec![Calibration::On, Calibration::Off],
                },
                mismatch: !mismatch_free,
            };
            commands::ber(&ctx, &opts)?
        }
        Command::Selftest => return Ok(commands::selftest()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
