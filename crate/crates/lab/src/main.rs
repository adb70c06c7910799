use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blowup_lab::catalog::{self, Source};
use blowup_lab::config::Config;
use blowup_lab::output::write_outcome;
use blowup_lab::{exit, run_scenario, LabError, Outcome};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "blowup-lab",
    version,
    about = "Run radial blow-up scenarios and check their verdicts"
)]
struct Cli {
    /// Worker threads for batch and refinement runs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario, given as a TOML path or a built-in name.
    Run {
        scenario: String,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List built-in scenarios and those found in a directory.
    List {
        #[arg(long)]
        scenario_dir: Option<PathBuf>,
    },
    /// Run every `*.toml` scenario in a directory.
    Batch {
        dir: PathBuf,
        /// Root for per-scenario output directories.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn report(outcome: &Outcome) {
    let name = &outcome.config.name;
    for v in &outcome.verdicts {
        let status = if v.passed { "PASS" } else { "FAIL" };
        println!(
            "{name}: {status} {} value={:e} threshold={:e} ({})",
            v.check, v.value, v.threshold, v.detail
        );
    }
    if let Some(b) = &outcome.blowup {
        println!("{name}: blow-up time {:.10} exponent {:.6}", b.blowup_time, b.exponent);
    }
    for note in &outcome.notes {
        println!("{name}: note: {note}");
    }
    let status = if outcome.passed() { "PASS" } else { "FAIL" };
    println!("{name}: {status} ({} checks)", outcome.verdicts.len());
}

fn execute(config: &Config, seed: Option<u64>, out: &Path) -> Result<i32, LabError> {
    let outcome = run_scenario(config, seed)?;
    write_outcome(&outcome, out)?;
    report(&outcome);
    Ok(outcome.exit_code())
}

fn run_one(config: &Config, seed: Option<u64>, out: &Path) -> i32 {
    execute(config, seed, out).unwrap_or_else(|e| {
        eprintln!("{}: error: {e}", config.name);
        e.exit_code()
    })
}

fn dispatch(command: Command) -> i32 {
    match command {
        Command::Run { scenario, out, seed } => match catalog::resolve(&scenario) {
            Ok(config) => {
                let out = out.unwrap_or_else(|| Path::new("out").join(&config.name));
                run_one(&config, seed, &out)
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::List { scenario_dir } => match catalog::list(scenario_dir.as_deref()) {
            Ok(entries) => {
                for entry in entries {
                    let origin = match &entry.source {
                        Source::Builtin => "built-in".to_string(),
                        Source::File(path) => path.display().to_string(),
                    };
                    println!("{}\t{}\t{}", entry.config.name, origin, entry.config.description);
                }
                exit::PASS
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Batch { dir, out, seed } => {
            let entries = match catalog::list(Some(&dir)) {
                Ok(entries) => entries,
                Err(e) => {
                    eprintln!("error: {e}");
                    return e.exit_code();
                }
            };
            let configs: Vec<Config> = entries
                .into_iter()
                .filter(|e| e.source != Source::Builtin)
                .map(|e| e.config)
                .collect();
            if configs.is_empty() {
                eprintln!("error: no scenarios in {}", dir.display());
                return exit::CONFIG_ERROR;
            }
            configs
                .par_iter()
                .map(|c| run_one(c, seed, &out.join(&c.name)))
                .max()
                .unwrap_or(exit::PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.threads {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => {
                eprintln!("error: cannot start {threads} threads: {e}");
                exit::CONFIG_ERROR
            }
        },
        None => dispatch(cli.command),
    };
    ExitCode::from(code as u8)
}
