use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use transmute_lab::scenario::{self, Format, Scenario};
use transmute_lab::Error;

#[derive(Parser)]
#[command(name = "transmute-lab", version, about = "Scenario runner for discrete transmutation operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output encoding: csv, json or bin (bin applies to dense operators).
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its report and artifacts.
    Run {
        file: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the available checks.
    Checks,
    /// Compute and write one artifact for a scenario.
    Export {
        artifact: String,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool, Error> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("threads: {e}")))?;
    }
    let format = cli.format.as_deref().map(Format::parse).transpose()?;
    match cli.command {
        Command::Run { file, out_dir, seed } => {
            let mut s = Scenario::load(&file)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let dir = scenario::output_dir(&s, out_dir.as_deref());
            let start = Instant::now();
            let report = scenario::run(&s, &dir, format.unwrap_or_default())?;
            for c in &report.checks {
                println!(
                    "{:<4} {:<34} value={:<12.4e} tol={:<8.1e} ({:.2?})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance,
                    c.runtime
                );
            }
            println!(
                "{:?} {} in {:.2?}, artifacts in {}",
                report.verdict,
                report.scenario,
                start.elapsed(),
                dir.display()
            );
            Ok(report.passed())
        }
        Command::Checks => {
            let cat = scenario::catalogue();
            if format == Some(Format::Json) {
                println!("{}", serde_json::to_string_pretty(&cat)?);
            } else {
                for c in &cat {
                    let bound = match c.bound {
                        scenario::Bound::AtMost => "<=",
                        scenario::Bound::AtLeast => ">=",
                    };
                    println!(
                        "{:<34} {:<10} {bound} {:<8.1e} {}",
                        c.name,
                        format!("{:?}", c.group).to_lowercase(),
                        c.default_tolerance,
                        c.identity
                    );
                }
            }
            Ok(true)
        }
        Command::Export { artifact, scenario: file, out_dir } => {
            let s = Scenario::load(&file)?;
            let dir = scenario::output_dir(&s, out_dir.as_deref());
            let path = scenario::export(&s, &artifact, &dir, format.unwrap_or_default())?;
            println!("{}", path.display());
            Ok(true)
        }
    }
}
