//! `cafet`: cross-section-average factor estimation and out-of-sample
//! forecast accuracy testing.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cafet_cli::commands::{
    cmd_calibrate, cmd_diagnose, cmd_simulate, cmd_test, SimulateOverrides, TestOptions,
};
use cafet_cli::CliError;
use cafet_core::stats::VarianceMode;

#[derive(Debug, Parser)]
#[command(name = "cafet", version, about = "Forecast accuracy tests for factor-augmented regressions with cross-section-average factors")]
struct Cli {
    /// Worker threads for Monte Carlo replications (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VarianceArg {
    Conventional,
    Hac,
}

impl From<VarianceArg> for VarianceMode {
    fn from(v: VarianceArg) -> Self {
        match v {
            VarianceArg::Conventional => VarianceMode::Conventional,
            VarianceArg::Hac => VarianceMode::Hac,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Experiment grid configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for rejections.csv and summary.md.
    #[arg(long)]
    out: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Variance estimator override.
    #[arg(long, value_enum)]
    variance: Option<VarianceArg>,
    /// Significance level override.
    #[arg(long)]
    level: Option<f64>,
    /// Force the power enhancement on.
    #[arg(long, overrides_with = "no_enhanced")]
    enhanced: bool,
    /// Force the power enhancement off.
    #[arg(long)]
    no_enhanced: bool,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// Data CSV (first column time labels, one column per series).
    #[arg(long)]
    data: PathBuf,
    /// Schema CSV (name, block, tcode, target).
    #[arg(long)]
    schema: PathBuf,
    /// Target series to forecast.
    #[arg(long)]
    target: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Forecast horizon.
    #[arg(long, default_value_t = 1)]
    h: usize,
    /// Variance estimator.
    #[arg(long, value_enum, default_value = "conventional")]
    variance: VarianceArg,
    /// Significance level for the bolding marker.
    #[arg(long, default_value_t = 0.10)]
    level: f64,
    /// Force the power enhancement on (default).
    #[arg(long, overrides_with = "no_enhanced")]
    enhanced: bool,
    /// Disable the power enhancement.
    #[arg(long)]
    no_enhanced: bool,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    /// Data CSV.
    #[arg(long)]
    data: PathBuf,
    /// Schema CSV.
    #[arg(long)]
    schema: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Replications per grid point.
    #[arg(long, default_value_t = 60_000)]
    reps: usize,
    /// Comma-separated sample-size grid.
    #[arg(long, default_value = "500,1000,2000", value_delimiter = ',')]
    n_grid: Vec<usize>,
    /// Master seed.
    #[arg(long, default_value_t = 20_240_811)]
    seed: u64,
    /// Optional output directory for calibrated_thetas.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment grid and tabulate rejection rates.
    Simulate(SimulateArgs),
    /// Test factor predictive power on a block-structured dataset.
    Test(TestArgs),
    /// Emit factor-count and correlation diagnostics for a dataset.
    Diagnose(DiagnoseArgs),
    /// Re-run the null calibration of the variance constants.
    Calibrate(CalibrateArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {workers} workers: {e}")))?;
    }
    match cli.command {
        Command::Simulate(args) => {
            let overrides = SimulateOverrides {
                seed: args.seed,
                variance: args.variance.map(Into::into),
                level: args.level,
                enhanced: if args.enhanced {
                    Some(true)
                } else if args.no_enhanced {
                    Some(false)
                } else {
                    None
                },
            };
            cmd_simulate(&args.config, &args.out, &overrides)
        }
        Command::Test(args) => {
            let opts = TestOptions {
                h: args.h,
                variance: args.variance.into(),
                level: args.level,
                enhanced: !args.no_enhanced,
            };
            cmd_test(&args.data, &args.schema, &args.target, &args.out, &opts)
        }
        Command::Diagnose(args) => cmd_diagnose(&args.data, &args.schema, &args.out),
        Command::Calibrate(args) => {
            cmd_calibrate(args.reps, &args.n_grid, args.seed, args.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}
