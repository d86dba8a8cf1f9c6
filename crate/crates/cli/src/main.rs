use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use enflow::solve::SolveOptions;
use enflow_cli::pipeline::{run_build, run_results, run_solve, run_validate, CliError};
use enflow_cli::scenario::ScenarioError;

/// Energy system modelling: scenario files in, dispatch / investment /
/// unit-commitment optimization out. The model type follows from the
/// scenario's parametrisation alone.
#[derive(Parser)]
#[command(name = "enflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario file
    Validate {
        /// Scenario file
        scenario: PathBuf,
    },
    /// Compile a scenario and export the model as a CPLEX LP file
    Build {
        /// Scenario file
        scenario: PathBuf,
        /// Output LP file
        #[arg(long)]
        lp: PathBuf,
    },
    /// Compile and solve a scenario, writing results to a directory
    Solve {
        /// Scenario file
        scenario: PathBuf,
        /// Output directory (meta.txt and per-bus CSVs)
        #[arg(long)]
        out: PathBuf,
        /// Absolute branch-and-bound gap tolerance
        #[arg(long)]
        tol: Option<f64>,
        /// Branch-and-bound node cap
        #[arg(long)]
        max_nodes: Option<usize>,
    },
    /// Print one node's results table from a solve directory as CSV
    Results {
        /// Directory written by solve
        dir: PathBuf,
        /// Node label
        #[arg(long)]
        node: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            report(&error);
            ExitCode::from(error.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { scenario } => {
            run_validate(&scenario)?;
            println!("OK");
            Ok(())
        }
        Command::Build { scenario, lp } => run_build(&scenario, &lp),
        Command::Solve {
            scenario,
            out,
            tol,
            max_nodes,
        } => {
            let mut options = SolveOptions::default();
            if let Some(tol) = tol {
                options.mip_gap_abs = tol;
            }
            if let Some(max_nodes) = max_nodes {
                options.max_nodes = max_nodes;
            }
            let objective = run_solve(&scenario, &out, &options)?;
            println!("optimal objective={objective:.6}");
            Ok(())
        }
        Command::Results { dir, node } => {
            print!("{}", run_results(&dir, &node)?);
            Ok(())
        }
    }
}

/// One "error:"-prefixed line per diagnostic on stderr.
fn report(error: &CliError) {
    if let CliError::Scenario(ScenarioError::Validation { path, issues }) = error {
        for issue in issues {
            match issue.line {
                Some(line) => eprintln!("error: {path}:{line}: {}", issue.violation),
                None => eprintln!("error: {path}: {}", issue.violation),
            }
        }
        return;
    }
    eprintln!("error: {error}");
}
