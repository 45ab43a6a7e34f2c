use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bandsplit_cli::{compare, load_scenario, read_records, run_suite, write_records, Format};
use bandsplit_core::config::scenarios;
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "bandsplit", version, about = "Simulate and compare multi-band packet schedulers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured scheduler over the replication seeds.
    Run {
        /// Scenario JSON file, or the name of a bundled scenario.
        config: String,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutFormat,
        /// Number of seeds, overriding the scenario's replications.
        #[arg(long)]
        seeds: Option<u32>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Paired per-seed comparison of records against a baseline scheduler.
    Compare {
        /// CSV or JSON-lines records written by `run`.
        records: PathBuf,
        #[arg(long)]
        baseline: String,
    },
    /// Print a bundled scenario as JSON, or list them.
    Scenario { name: Option<String> },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            format,
            seeds,
            jobs,
        } => {
            let mut cfg = match load_scenario(&config) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            if let Some(n) = seeds {
                if n == 0 {
                    return fail(EXIT_CONFIG, "--seeds must be positive");
                }
                cfg.replications = n;
            }
            let records = match run_suite(&cfg, &cfg.seeds(), jobs) {
                Ok(r) => r,
                Err(e) => return fail(EXIT_RUNTIME, e),
            };
            let format = match format {
                OutFormat::Csv => Format::Csv,
                OutFormat::Json => Format::Json,
            };
            let written = match &out {
                Some(path) => File::create(path)
                    .map_err(|e| format!("{}: {e}", path.display()))
                    .and_then(|f| write_records(&records, format, BufWriter::new(f)).map_err(|e| e.to_string())),
                None => write_records(&records, format, io::stdout().lock()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::Compare { records, baseline } => {
            let text = match std::fs::read_to_string(&records) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", records.display())),
            };
            let parsed = match read_records(&text) {
                Ok(r) => r,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            match compare(&parsed, &baseline) {
                Ok(c) => {
                    print!("{}", c.render());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::Scenario { name } => match name {
            None => {
                let mut out = io::stdout().lock();
                for n in scenarios::NAMES {
                    let _ = writeln!(out, "{n}");
                }
                ExitCode::SUCCESS
            }
            Some(n) => match scenarios::builtin(&n) {
                Some(cfg) => {
                    println!("{}", cfg.to_json());
                    ExitCode::SUCCESS
                }
                None => fail(EXIT_CONFIG, format!("unknown scenario `{n}`")),
            },
        },
    }
}
