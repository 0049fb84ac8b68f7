//! `slowfast`: reduce, validate and sweep slow/fast Lindblad models from
//! JSON model files.
//!
//! Exit codes: 0 success, 1 usage/parse/input errors, 2 when the fast
//! generator violates the reduction hypotheses, 3 when the order-by-order
//! recursion fails its consistency checks. The log level is read from
//! `SLOWFAST_LOG` (e.g. `SLOWFAST_LOG=debug`).

mod commands;
mod model_file;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, CliResult, Overrides, SweepOptions};

#[derive(Debug, Parser)]
#[command(
    name = "slowfast",
    version,
    about = "Adiabatic elimination for slow/fast Lindblad models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Expansion order (overrides the model file)
    #[arg(long)]
    order: Option<usize>,
    /// Largest order the expansion may be asked for
    #[arg(long)]
    max_order: Option<usize>,
    /// Seed for the validation initial state (overrides the model file)
    #[arg(long)]
    seed: Option<u64>,
    /// Relative threshold for zero eigenvalues of the fast generator
    #[arg(long)]
    zero_tol: Option<f64>,
    /// Allowed relative invariance residual per order
    #[arg(long)]
    residual_tol: Option<f64>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            order: self.order,
            seed: self.seed,
            max_order: self.max_order,
            zero_tol: self.zero_tol,
            residual_tol: self.residual_tol,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral split and both expansions; writes a JSON report
    Reduce {
        model: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Report path (stdout if absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce, then check the reduced dynamics against exact propagation
    Validate {
        model: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Slow horizon for the second-order check, in units of 1/ε
        #[arg(long, default_value_t = 1.0)]
        tbar: f64,
        /// Comma-separated times for the closeness check (default 2/γ..20/γ)
        #[arg(long, value_delimiter = ',')]
        tgrid: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error metrics over an (ε, order) grid; writes CSV
    Sweep {
        model: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated ε values (default: the model file's)
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Comma-separated truncation orders (default: the model order)
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
        /// Fixed horizon for the slow-coordinate error (default 20/γ)
        #[arg(long)]
        horizon: Option<f64>,
        /// Slow horizon for the state error, in units of 1/ε
        #[arg(long, default_value_t = 1.0)]
        tbar: f64,
        /// Worker threads (default: all cores)
        #[arg(long)]
        jobs: Option<usize>,
        /// CSV path (stdout if absent)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// List the benchmark models or write one as a model file
    Zoo {
        #[arg(long, conflicts_with = "emit")]
        list: bool,
        /// NAME PATH
        #[arg(long, num_args = 2, value_names = ["NAME", "PATH"])]
        emit: Option<Vec<String>>,
        /// Parameter override for --emit, as key=value (repeatable)
        #[arg(long = "set")]
        set: Vec<String>,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Reduce { model, common, out } => {
            commands::cmd_reduce(&model, &common.overrides(), out.as_deref()).map(|_| ())
        }
        Command::Validate {
            model,
            common,
            tbar,
            tgrid,
            out,
        } => commands::cmd_validate(
            &model,
            &common.overrides(),
            tbar,
            tgrid.as_deref(),
            out.as_deref(),
        )
        .map(|_| ()),
        Command::Sweep {
            model,
            common,
            epsilons,
            orders,
            horizon,
            tbar,
            jobs,
            csv,
        } => {
            let opts = SweepOptions {
                epsilons,
                orders,
                horizon,
                tbar,
                jobs,
            };
            commands::cmd_sweep(&model, &common.overrides(), &opts, csv.as_deref()).map(|_| ())
        }
        Command::Zoo {
            list,
            emit,
            set,
            order,
            seed,
        } => match (list, emit) {
            (true, _) => {
                print!("{}", commands::cmd_zoo_list());
                Ok(())
            }
            (false, Some(args)) => commands::cmd_zoo_emit(
                &args[0],
                PathBuf::from(&args[1]).as_path(),
                &set,
                order,
                seed,
            )
            .map(|_| ()),
            (false, None) => Err(CliError::Usage(
                "zoo needs --list or --emit NAME PATH".into(),
            )),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SLOWFAST_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors; every other
            // parse failure is a usage error.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slowfast: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
