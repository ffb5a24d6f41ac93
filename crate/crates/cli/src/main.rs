//! Command-line front end.
//!
//! ```text
//! intlasso experiment --config PLAN --out CSV [--threads N] [--seed S]
//! intlasso run --config CONFIG --out DIR [--dump-messages] DATA1 [DATA2 ...]
//! intlasso oracle-check [--seed S] [--count N]
//! ```
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error.

mod config;
mod experiment;
mod run_once;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use intlasso::aggregate::{aggregate_location, oracle_grid_min, LocationProblem};
use intlasso::rng::{Purpose, StreamRng};

use config::KvFile;
use experiment::{run_experiment, to_csv, ExperimentPlan};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    pub fn from_core(err: intlasso::Error) -> Self {
        CliError::Validation(err.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

#[derive(Debug, Default)]
struct Args {
    subcommand: String,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
    count: Option<usize>,
    dump_messages: bool,
    positional: Vec<String>,
}

fn parse_args(argv: &[String]) -> Result<Args, CliError> {
    let mut args = Args {
        subcommand: argv
            .first()
            .cloned()
            .ok_or_else(|| CliError::validation(USAGE))?,
        ..Args::default()
    };
    let mut it = argv[1..].iter();
    while let Some(arg) = it.next() {
        let mut take = |name: &str| -> Result<String, CliError> {
            it.next()
                .cloned()
                .ok_or_else(|| CliError::validation(format!("{name} needs a value")))
        };
        match arg.as_str() {
            "--config" => args.config = Some(PathBuf::from(take("--config")?)),
            "--out" => args.out = Some(PathBuf::from(take("--out")?)),
            "--threads" => {
                args.threads = Some(take("--threads")?.parse().map_err(|_| {
                    CliError::validation("--threads needs a positive integer")
                })?)
            }
            "--seed" => {
                args.seed = Some(
                    take("--seed")?
                        .parse()
                        .map_err(|_| CliError::validation("--seed needs an integer"))?,
                )
            }
            "--count" => {
                args.count = Some(
                    take("--count")?
                        .parse()
                        .map_err(|_| CliError::validation("--count needs an integer"))?,
                )
            }
            "--dump-messages" => args.dump_messages = true,
            other if other.starts_with("--") => {
                return Err(CliError::validation(format!("unknown flag '{other}'")))
            }
            other => args.positional.push(other.to_string()),
        }
    }
    Ok(args)
}

const USAGE: &str = "usage: intlasso <experiment|run|oracle-check> [--config PATH] [--out PATH] \
                     [--threads N] [--seed S] [--count N] [--dump-messages] [FILES...]";

fn load_config(args: &Args) -> Result<KvFile, CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::validation("--config required"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    KvFile::parse(&text)
}

fn cmd_experiment(args: &Args) -> Result<(), CliError> {
    let kv = load_config(args)?;
    let mut plan = ExperimentPlan::from_config(&kv)?;
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| CliError::validation("--out required"))?;
    let (detail, summary) = run_experiment(&plan)?;
    fs::write(out, to_csv(&detail, &summary))
        .map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
    println!(
        "wrote {} detail rows and {} summary rows to {}",
        detail.len(),
        summary.len(),
        out.display()
    );
    Ok(())
}

fn cmd_run(args: &Args) -> Result<(), CliError> {
    let kv = load_config(args)?;
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| CliError::validation("--out required"))?;
    if args.positional.is_empty() {
        return Err(CliError::validation("at least one dataset file required"));
    }
    run_once::run_once(&args.positional, &kv, out, args.dump_messages)?;
    println!("wrote results to {}", out.display());
    Ok(())
}

fn cmd_oracle_check(args: &Args) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(0);
    let count = args.count.unwrap_or(1000);
    let mut rng = StreamRng::new(seed, 0, Purpose::Misc);
    let mut max_gap = 0.0f64;
    for i in 0..count {
        let m = 1 + rng.next_index(50);
        let values: Vec<f64> = (0..m).map(|_| -10.0 + 20.0 * rng.next_f64()).collect();
        let weights: Vec<f64> = (0..m).map(|_| 0.5 + 4.5 * rng.next_f64()).collect();
        let eta = 0.1 + 19.9 * rng.next_f64();
        let p = LocationProblem {
            values,
            weights,
            eta,
        };
        let sol = aggregate_location(&p).map_err(CliError::from_core)?;
        let (_, oracle_obj) = oracle_grid_min(&p, 1000);
        let gap = sol.objective - oracle_obj;
        max_gap = max_gap.max(gap);
        if gap > 1e-9 {
            return Err(CliError::validation(format!(
                "instance {i}: aggregate objective {} exceeds grid oracle {oracle_obj}",
                sol.objective
            )));
        }
    }
    println!("oracle check passed: {count} instances, max objective gap {max_gap:.3e}");
    Ok(())
}

fn run(argv: &[String]) -> Result<(), CliError> {
    let args = parse_args(argv)?;
    if let Some(n) = args.threads {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match args.subcommand.as_str() {
        "experiment" => cmd_experiment(&args),
        "run" => cmd_run(&args),
        "oracle-check" => cmd_oracle_check(&args),
        other => Err(CliError::validation(format!(
            "unknown subcommand '{other}'\n{USAGE}"
        ))),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(&argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
