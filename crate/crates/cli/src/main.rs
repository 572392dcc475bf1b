use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gate_cli::{cmd_compare, cmd_run, cmd_sweep, exit_code, format_summary, Grid, SweepRequest};
use gate_core::{GateError, Mode, SolverSettings};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(
    name = "gate",
    version,
    about = "Run, sweep and compare GATE model solves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct SolverArgs {
    /// Gradient max-norm tolerance relative to |V|.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Starting points per solve; more starts guard against local optima.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    starts: Option<u32>,
}

impl SolverArgs {
    fn settings(self) -> SolverSettings {
        let d = SolverSettings::default();
        SolverSettings {
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            starts: self.starts.map_or(d.starts, |n| n as usize),
            ..d
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write its artefacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "det")]
        mode: Mode,
        #[arg(long, default_value = "gate-run")]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Align the headline series of two or more run directories.
    Compare {
        #[arg(required = true, num_args = 2..)]
        dirs: Vec<PathBuf>,
        /// Also write the table to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// `a,b,c`, `lin:start:stop:n` or `log:start:stop:n`.
        #[arg(long)]
        grid: Grid,
        #[arg(long, default_value = "det")]
        mode: Mode,
        #[arg(long, default_value = "gate-sweep")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

fn init_logging() {
    let filter =
        EnvFilter::try_from_env("GATE_LOG_LEVEL").unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn report(err: &GateError) -> ExitCode {
    match err {
        GateError::Invalid(violations) => {
            eprintln!("error: invalid parameters");
            for v in violations {
                eprintln!("  {v}");
            }
        }
        other => eprintln!("error: {other}"),
    }
    ExitCode::from(exit_code(err) as u8)
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            mode,
            out,
            solver,
        } => cmd_run(&config, mode, &solver.settings(), &out).map(|run| {
            print!("{}", format_summary(&run.manifest));
            println!("wrote {}", out.display());
        }),
        Command::Compare { dirs, csv } => cmd_compare(&dirs).and_then(|cmp| {
            for w in &cmp.warnings {
                eprintln!("warning: {w}");
            }
            let table = cmp.to_csv();
            if let Some(path) = csv {
                gate_core::io::write_atomic(&path, table.as_bytes())?;
            }
            print!("{table}");
            Ok(())
        }),
        Command::Sweep {
            config,
            param,
            grid,
            mode,
            out,
            jobs,
            solver,
        } => {
            let req = SweepRequest {
                config: &config,
                param: &param,
                grid: &grid,
                mode,
                settings: solver.settings(),
                out: &out,
                jobs,
            };
            cmd_sweep(&req).map(|points| {
                print!("{}", gate_cli::sweep_csv(&param, &points));
                let failed = points.iter().filter(|p| p.error.is_some()).count();
                if failed > 0 {
                    eprintln!("{failed} of {} points failed", points.len());
                }
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
