use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use splitprec::bench::{
    dump_residuals, load_suite_spec, render_table, run_cell, run_suite, AlgorithmColumn,
    CellOutcome, Precond, TableFormat,
};
use splitprec::problems::load_problem;
use splitprec::splitting::{DEFAULT_ALPHA, DEFAULT_TARGET_NORM};

#[derive(Parser)]
#[command(name = "splitprec", about = "Matrix-free solvers with a universal split preconditioner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Fp,
    Gmres,
    Bicgstab,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecondArg {
    None,
    Universal,
    Shift,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single problem configuration.
    Solve {
        /// Problem configuration (JSON).
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum)]
        algorithm: AlgorithmArg,
        /// GMRES restart length.
        #[arg(long, default_value_t = 20)]
        restart: usize,
        /// Fixed-point step size.
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "universal")]
        precond: PrecondArg,
        /// Shift-splitting γ.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 30_000)]
        max_iter: u64,
        /// Residual-history CSV output path.
        #[arg(long)]
        residuals: Option<PathBuf>,
        /// Solver-report JSON output path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a problem × algorithm × preconditioner suite.
    Suite {
        /// Suite specification (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Output table; a .csv extension selects CSV, anything else markdown.
        #[arg(long)]
        out: PathBuf,
    },
}

fn solve(
    problem: &PathBuf,
    column: AlgorithmColumn,
    precond: Precond,
    tol: f64,
    max_iter: u64,
    residuals: Option<&PathBuf>,
    report_path: Option<&PathBuf>,
) -> Result<(), splitprec::Error> {
    let split = load_problem(problem)?.build(DEFAULT_TARGET_NORM)?;
    match run_cell(&split, column, precond, tol, max_iter) {
        CellOutcome::Failed(msg) => Err(splitprec::Error::Config(msg)),
        CellOutcome::Ran { report, raw_residual } => {
            println!(
                "status: {:?}  iterations: {}  operator evals: {}  wall: {:.3} s  raw residual: {:.3e}",
                report.status, report.iterations, report.operator_evals, report.wall_time,
                raw_residual
            );
            if let Some(path) = residuals {
                dump_residuals(&report, path)?;
            }
            if let Some(path) = report_path {
                let json = serde_json::to_string_pretty(&report)
                    .map_err(|e| splitprec::Error::Config(e.to_string()))?;
                std::fs::write(path, json)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve {
            problem,
            algorithm,
            restart,
            alpha,
            precond,
            gamma,
            tol,
            max_iter,
            residuals,
            report,
        } => {
            let column = match algorithm {
                AlgorithmArg::Fp => AlgorithmColumn::Fp(alpha),
                AlgorithmArg::Gmres => AlgorithmColumn::Gmres(restart),
                AlgorithmArg::Bicgstab => AlgorithmColumn::Bicgstab,
            };
            let precond = match precond {
                PrecondArg::None => Precond::None,
                PrecondArg::Universal => Precond::Universal,
                PrecondArg::Shift => Precond::Shift(gamma),
            };
            solve(
                &problem,
                column,
                precond,
                tol,
                max_iter,
                residuals.as_ref(),
                report.as_ref(),
            )
        }
        Command::Suite { spec, out } => (|| {
            let spec = load_suite_spec(&spec)?;
            let result = run_suite(&spec);
            let format = match out.extension().and_then(|e| e.to_str()) {
                Some("csv") => TableFormat::Csv,
                _ => TableFormat::Markdown,
            };
            std::fs::write(&out, render_table(&result, format))?;
            println!("wrote {}", out.display());
            Ok(())
        })(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
