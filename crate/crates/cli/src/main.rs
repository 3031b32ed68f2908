//! `mso` — certify and solve discrete magnetic Schrödinger operators on
//! weighted graphs.
//!
//! Subcommands: `certify` (surjectivity verdict with replayable witnesses),
//! `solve` (windowed solver for `𝓜g = f`), `max-principle` (pointwise audit
//! for scalar operators), `verify-witness` (independent replay of a
//! report's witnesses), and `demo` (built-in end-to-end walkthroughs).

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

mod commands;
mod problem;
mod report;

use commands::CommandResult;
use mso::certify::CertificateBudgets;
use problem::LoadedProblem;

#[derive(Parser)]
#[command(
    name = "mso",
    version,
    about = "Magnetic Schrödinger operators on weighted graphs: surjectivity certificates and windowed solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Print the full JSON report to stdout instead of text.
    #[arg(long)]
    json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify or refute surjectivity of the operator in a problem file.
    /// Exit codes: 0 Certified, 2 Refuted, 3 Undecided, 1 input error.
    Certify {
        problem: PathBuf,
        /// Center vertex token (defaults to the generator's base vertex).
        #[arg(long)]
        center: Option<String>,
        /// Largest ball radius for the form nonnegativity probe.
        #[arg(long, default_value_t = 6)]
        form_radius: usize,
        /// Vertex budget for the connected-component probe.
        #[arg(long, default_value_t = 512)]
        component_budget: usize,
        /// Ball radius of the finitely-supported kernel search.
        #[arg(long, default_value_t = 4)]
        kernel_radius: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve 𝓜g = f exactly on a finite window.
    /// Exit codes: 0 Solved, 2 GloballyObstructed, 3 BudgetExhausted.
    Solve {
        problem: PathBuf,
        /// Name of the right-hand-side field defined in the problem file.
        #[arg(long)]
        rhs: String,
        /// Center vertex token (defaults to the generator's base vertex).
        #[arg(long)]
        center: Option<String>,
        /// The window is the ball of this radius around the center.
        #[arg(long, default_value_t = 3)]
        window_radius: usize,
        /// Largest unknown-ball radius to try.
        #[arg(long, default_value_t = 24)]
        max_radius: usize,
        /// Residual tolerance on the window.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Audit the pointwise maximum principle of a scalar problem.
    MaxPrinciple {
        problem: PathBuf,
        /// Audit exactly these vertex tokens (repeatable).
        #[arg(long = "vertices")]
        vertices: Vec<String>,
        /// Audit the ball of this radius around the center instead.
        #[arg(long)]
        radius: Option<usize>,
        /// Center vertex token for --radius mode.
        #[arg(long)]
        center: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Independently replay the witnesses embedded in a report.
    /// Exit codes: 0 all replayed, 2 replay failed, 1 no witness.
    VerifyWitness { report: PathBuf },
    /// Run a built-in demonstration: finite-component, infinite-star, or
    /// hexagram.
    Demo {
        name: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn emit(result: CommandResult, output: &OutputArgs) -> anyhow::Result<i32> {
    let json = serde_json::to_string_pretty(&result.report)?;
    if let Some(path) = &output.out {
        std::fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?;
    }
    if output.json {
        println!("{json}");
    } else {
        print!("{}", result.text);
    }
    Ok(result.exit_code)
}

fn load(path: &PathBuf) -> anyhow::Result<LoadedProblem> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    LoadedProblem::from_json(&text)
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Certify {
            problem,
            center,
            form_radius,
            component_budget,
            kernel_radius,
            output,
        } => {
            let loaded = load(&problem)?;
            let budgets = CertificateBudgets {
                form_radius,
                component_budget,
                kernel_radius,
            };
            emit(commands::certify(loaded, center, budgets)?, &output)
        }
        Command::Solve {
            problem,
            rhs,
            center,
            window_radius,
            max_radius,
            tol,
            output,
        } => {
            let loaded = load(&problem)?;
            emit(
                commands::solve(loaded, rhs, center, window_radius, max_radius, tol)?,
                &output,
            )
        }
        Command::MaxPrinciple {
            problem,
            vertices,
            radius,
            center,
            output,
        } => {
            let loaded = load(&problem)?;
            emit(
                commands::max_principle(loaded, vertices, center, radius)?,
                &output,
            )
        }
        Command::VerifyWitness { report } => {
            let text = std::fs::read_to_string(&report)
                .with_context(|| format!("reading {}", report.display()))?;
            let (code, summary) = commands::verify_witness(&text)?;
            print!("{summary}");
            Ok(code)
        }
        Command::Demo { name, output } => emit(commands::demo(&name)?, &output),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    std::process::exit(code);
}
