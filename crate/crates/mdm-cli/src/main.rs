//! `mdm`: census, quadrature runs, and reference values for the
//! infinite-variate decomposition method, as JSON reports plus optional
//! CSV rows and JSON-lines set dumps.
//!
//! Exit codes: 0 on success, 2 for validation or artifact errors (clap
//! usage errors included), 3 when a numeric or capacity limit is hit.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mdm_cli::{
    append_csv, execute_active_set, execute_reference, execute_run, write_json_pretty,
    ActiveSetSpec, CliResult, Method, RunSpec,
};

#[derive(Parser)]
#[command(name = "mdm", version, about = "Decomposition-method quadrature driver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the active-set census for one (beta, epsilon) pair.
    ActiveSet {
        /// Weight decay exponent of the benchmark integrand.
        #[arg(long)]
        beta: f64,
        /// Requested total error.
        #[arg(long = "eps")]
        epsilon: f64,
        /// Truncation length of the cardinality series in the sum bound.
        #[arg(long, default_value_t = 1000)]
        s: u32,
        /// Hoelder split parameter of the tail bound, in (0,1).
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        /// Grid points for the threshold maximization over alpha.
        #[arg(long = "alpha-grid", default_value_t = 100)]
        alpha_grid: u32,
        /// Path of the JSON census report.
        #[arg(long)]
        out: PathBuf,
        /// Also dump every member set as JSON-lines to this path.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Run one quadrature method through the full pipeline.
    Run {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        beta: f64,
        #[arg(long = "eps")]
        epsilon: f64,
        /// Number of random shifts (randomized method only).
        #[arg(long, default_value_t = 16)]
        shifts: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; 1 keeps runs reproducible by construction.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 1000)]
        s: u32,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long = "alpha-grid", default_value_t = 100)]
        alpha_grid: u32,
        /// Reference value for the total-error column; defaults to the
        /// published constant at beta = 3 and to a reference run otherwise.
        #[arg(long)]
        reference: Option<f64>,
        /// Path of the JSON run report.
        #[arg(long)]
        out: PathBuf,
        /// Append a flat row to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Estimate the integral restricted to the first `dims` variables with
    /// a randomly shifted lattice rule (2^m points per shift).
    Reference {
        #[arg(long)]
        beta: f64,
        /// Points per shift as a power of two; at most 25.
        #[arg(long)]
        m: u32,
        /// Number of leading variables kept.
        #[arg(long)]
        dims: usize,
        #[arg(long, default_value_t = 16)]
        shifts: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional path of the JSON reference report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::ActiveSet {
            beta,
            epsilon,
            s,
            t,
            alpha_grid,
            out,
            dump,
        } => {
            let spec = ActiveSetSpec {
                beta,
                epsilon,
                s,
                t,
                alpha_grid,
            };
            let (report, active) = execute_active_set(&spec)?;
            write_json_pretty(&out, &report)?;
            if let Some(path) = dump {
                let file = BufWriter::new(File::create(path)?);
                active.write_jsonl(file)?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Cmd::Run {
            method,
            beta,
            epsilon,
            shifts,
            seed,
            threads,
            s,
            t,
            alpha_grid,
            reference,
            out,
            csv,
        } => {
            let spec = RunSpec {
                method,
                beta,
                epsilon,
                shifts,
                seed,
                threads,
                s,
                t,
                alpha_grid,
                reference,
            };
            let report = execute_run(&spec)?;
            write_json_pretty(&out, &report)?;
            if let Some(path) = csv {
                append_csv(&path, &report)?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Cmd::Reference {
            beta,
            m,
            dims,
            shifts,
            seed,
            out,
        } => {
            let report = execute_reference(beta, m, dims, shifts, seed)?;
            if let Some(path) = out {
                write_json_pretty(&path, &report)?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
