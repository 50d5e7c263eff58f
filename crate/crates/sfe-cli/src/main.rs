use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sfe_cli::commands::{
    cmd_closure, cmd_solve, cmd_verify, ClosureArgs, ExtensionChoice, Problem, SolveArgs,
    VerifyArgs,
};
use sfe_cli::report::Report;

#[derive(Parser)]
#[command(
    name = "sfe",
    version,
    about = "Continuous set-function extensions: gradient-based combinatorial solving, feasibility verification, and convex-closure cross-checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize an extension of a graph objective and decode a feasible set.
    Solve {
        /// Graph file (JSON `{"n":..,"edges":[[u,v],..]}` or `n <count>` header
        /// plus "u v" lines); repeatable.
        #[arg(long = "graph", required = true)]
        graph: Vec<PathBuf>,
        /// maxclique | mis
        #[arg(long)]
        problem: String,
        /// lovasz | bounded:K | neural-lovasz
        #[arg(long, default_value = "lovasz")]
        extension: String,
        /// Factor width d of X = VVᵀ (neural-lovasz only).
        #[arg(long, default_value_t = 4)]
        dim: usize,
        /// Eigenpairs kept by the lift (neural-lovasz only).
        #[arg(long, default_value_t = 4)]
        topk: usize,
        #[arg(long, default_value_t = 300)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also compute the exhaustive optimum and approximation ratio.
        #[arg(long)]
        with_oracle: bool,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run residual suites certifying the defining conditions.
    Verify {
        /// lp | sdp | extension | minima | gradient | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare extension values against the exact convex closure.
    Closure {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// random | cut | modular
        #[arg(long, default_value = "random")]
        family: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(report: &Report, out: Option<&PathBuf>) -> std::io::Result<()> {
    let text = report.to_json_pretty();
    match out {
        Some(path) => std::fs::write(path, text + "\n"),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, out) = match cli.command {
        Command::Solve {
            graph,
            problem,
            extension,
            dim,
            topk,
            steps,
            lr,
            restarts,
            seed,
            with_oracle,
            out,
        } => {
            let args = match (Problem::parse(&problem), ExtensionChoice::parse(&extension)) {
                (Ok(problem), Ok(extension)) => SolveArgs {
                    graphs: graph,
                    problem,
                    extension,
                    dim,
                    topk,
                    steps,
                    lr,
                    restarts,
                    seed,
                    with_oracle,
                },
                (Err(e), _) | (_, Err(e)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            (cmd_solve(&args), out)
        }
        Command::Verify {
            suite,
            n,
            trials,
            seed,
            out,
        } => (
            cmd_verify(&VerifyArgs {
                suite,
                n,
                trials,
                seed,
            }),
            out,
        ),
        Command::Closure {
            n,
            trials,
            seed,
            family,
            out,
        } => (
            cmd_closure(&ClosureArgs {
                n,
                trials,
                seed,
                family,
            }),
            out,
        ),
    };

    match result {
        Ok(report) => {
            if let Err(e) = emit(&report, out.as_ref()) {
                eprintln!("error writing report: {e}");
                return ExitCode::from(2);
            }
            if report.stable.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
