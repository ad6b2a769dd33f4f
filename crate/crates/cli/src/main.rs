use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dualmink::harness::{
    cmd_manufacture, cmd_plot, cmd_solve, cmd_sweep, cmd_verify, CmdOutcome, SolveOptions,
    SweepOptions, EXIT_INPUT,
};
use dualmink::sphere::Resolution;

/// Numerical solver and stability verifier for the even dual Minkowski
/// problem on S¹ and S².
#[derive(Parser)]
#[command(name = "dualmink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equation for a run configuration.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Result document (default: <output_dir>/result.toml).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Allow q outside (0, n].
        #[arg(long)]
        override_q_range: bool,
    },
    /// Run the stability and inequality checks on a converged result.
    Verify {
        result: PathBuf,
        /// Report document (default: <result>.verify.toml).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a sweep specification.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for per-run results and summary.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        override_q_range: bool,
    },
    /// Render a converged result as SVG.
    Plot {
        result: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the dual curvature density of a closed-form body.
    Manufacture {
        /// e.g. `ellipse(1.2,1)`, `ellipsoid(1.1,1,1)`, `ball(2)`.
        #[arg(long)]
        body: String,
        /// `N` on S¹ or `n_latxn_lon` on S².
        #[arg(long)]
        resolution: Resolution,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> dualmink::Result<CmdOutcome> {
    match cli.command {
        Command::Solve {
            config,
            out,
            seed,
            override_q_range,
        } => cmd_solve(
            &config,
            &SolveOptions {
                out,
                seed,
                override_q_range,
            },
        ),
        Command::Verify { result, out } => cmd_verify(&result, out.as_deref()),
        Command::Sweep {
            config,
            out,
            workers,
            seed,
            override_q_range,
        } => cmd_sweep(
            &config,
            &SweepOptions {
                out_dir: out,
                workers,
                seed,
                override_q_range,
            },
        ),
        Command::Plot { result, out } => cmd_plot(&result, out.as_deref()),
        Command::Manufacture {
            body,
            resolution,
            q,
            out,
        } => cmd_manufacture(&body, resolution, q, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
