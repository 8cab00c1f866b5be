//! fitzcert: scenario-driven verification of quantitative Fitzpatrick
//! inequalities.
//!
//! Exit codes: 0 all checks pass, 1 any certificate/oracle failure or
//! solver failure, 2 scenario schema violation.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fitzcert_cli::{run_oracle, run_sweep, run_verify, Report, RunError, Scenario};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "FITZCERT_OUT_DIR";

#[derive(Parser)]
#[command(name = "fitzcert", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every certificate requested by a scenario file.
    Verify {
        /// Scenario file (JSON).
        file: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        /// Worker threads for cell evaluation.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Override the scenario's certificate tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Cross-product sweep over lambda (and optionally p) values.
    Sweep {
        file: PathBuf,
        /// Comma-separated lambda values (may be empty for a zero-cell run).
        #[arg(long, value_delimiter = ',', num_args = 0.., allow_hyphen_values = true)]
        lambda: Vec<f64>,
        /// Comma-separated p values in (1, 2].
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        p: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Cross-validate closed forms against brute-force oracles.
    Oracle {
        file: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// Output base path; writes <out>.jsonl and/or <out>.csv. Relative
    /// paths resolve under $FITZCERT_OUT_DIR when it is set. Without
    /// --out, records go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Jsonl,
    Csv,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify { file, out, jobs, tol } => {
            load(&file).and_then(|sc| Ok((run_verify(&sc, jobs.max(1), tol)?, out)))
        }
        Command::Sweep { file, lambda, p, out, jobs, tol } => load(&file).and_then(|sc| {
            Ok((run_sweep(&sc, &lambda, p.as_deref(), jobs.max(1), tol)?, out))
        }),
        Command::Oracle { file, out } => load(&file).and_then(|sc| Ok((run_oracle(&sc)?, out))),
    };

    match outcome {
        Ok((report, out)) => {
            if let Err(e) = emit(&report, &out) {
                eprintln!("error writing report: {e}");
                return ExitCode::from(1);
            }
            eprint!("{}", report.digest());
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(RunError::Scenario(e)) => {
            eprintln!("scenario rejected: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, RunError> {
    Ok(Scenario::from_path(path)?)
}

fn emit(report: &Report, out: &OutputArgs) -> anyhow::Result<()> {
    match &out.out {
        Some(base) => {
            let base = resolve_out(base);
            if let Some(dir) = base.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            if out.format != Format::Csv {
                let f = std::fs::File::create(base.with_extension("jsonl"))?;
                report.write_jsonl(std::io::BufWriter::new(f))?;
            }
            if out.format != Format::Jsonl {
                let f = std::fs::File::create(base.with_extension("csv"))?;
                report.write_csv(std::io::BufWriter::new(f))?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            if out.format != Format::Csv {
                report.write_jsonl(&mut lock)?;
            }
            if out.format != Format::Jsonl {
                report.write_csv(&mut lock)?;
            }
            lock.flush()?;
        }
    }
    Ok(())
}

fn resolve_out(base: &Path) -> PathBuf {
    if base.is_relative() {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            return PathBuf::from(dir).join(base);
        }
    }
    base.to_path_buf()
}
