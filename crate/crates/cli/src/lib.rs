//! Subcommands of the `aro` binary.

pub mod bench;
pub mod record;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::Context;
use aro_core::instances::{generate, Family, GenSpec};
use aro_core::model::InstanceFile;
use clap::{Parser, Subcommand};
use serde_json::json;

pub use bench::{BenchConfig, BenchRow, GapRow};
pub use record::{Method, RunRecord, Status};

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: aro_core::Error| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "aro", version, about = "Two-stage adjustable robust optimization with affine policies")]
pub struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Per-solve wall-clock cap in seconds; 0 disables it.
    #[arg(long, global = true, default_value_t = 300.0)]
    pub time_cap: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated instance as JSON.
    Gen {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance file and print a JSON record.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Also write the record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare optimal and fast affine policies over seeded instances; CSV output.
    Bench {
        #[arg(long, value_parser = parse_family, value_delimiter = ',', default_values = ["gaussian_u1", "gaussian_u2"])]
        family: Vec<Family>,
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 30])]
        m: Vec<usize>,
        /// Seeds per cell.
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        /// First seed of every cell.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Adjustable versus affine optimum on lot-sizing instances; CSV output.
    GapDemo {
        #[arg(long, value_delimiter = ',', default_values_t = [4, 6, 8, 10])]
        m: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Executes a parsed command. Solver failures are reported inside records;
/// only configuration and I/O problems surface as errors.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let cap = (cli.time_cap > 0.0).then(|| Duration::from_secs_f64(cli.time_cap));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        anyhow::ensure!(j > 0, "--jobs must be positive");
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    // Worker threads cannot borrow `stdout`, so output is buffered.
    let mut buf = Vec::new();
    pool.install(|| run_command(cli.command, cap, &mut buf))?;
    stdout.write_all(&buf)?;
    Ok(())
}

fn run_command(command: Command, cap: Option<Duration>, stdout: &mut Vec<u8>) -> anyhow::Result<()> {
    match command {
        Command::Gen { family, m, seed, out } => {
            let spec = GenSpec::new(family, m, seed);
            let (inst, u) = generate(&spec)?;
            let meta = json!({ "id": spec.id(), "family": family.name(), "m": m, "seed": seed });
            let text = InstanceFile::from_model(&inst, &u, Some(meta)).to_json();
            std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
            log::info!("wrote {}", out.display());
            Ok(())
        }
        Command::Solve { instance, method, out } => {
            let li = record::load_instance(&instance)?;
            let rec = record::solve(&li, method, cap);
            let line = serde_json::to_string(&rec)?;
            writeln!(stdout, "{line}")?;
            if let Some(p) = out {
                std::fs::write(&p, format!("{line}\n")).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(())
        }
        Command::Bench { family, m, seeds, seed, out } => {
            let cfg = BenchConfig { families: family, ms: m, seeds, base_seed: seed, time_cap: cap };
            let rows = bench::run_bench(&cfg);
            emit_csv(&rows, &out, stdout)
        }
        Command::GapDemo { m, out } => {
            let rows = bench::run_gap_demo(&m, cap);
            emit_csv(&rows, &out, stdout)
        }
    }
}

fn emit_csv<T: serde::Serialize>(rows: &[T], out: &Option<PathBuf>, stdout: &mut Vec<u8>) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            bench::write_csv(rows, f)?;
        }
        None => bench::write_csv(rows, stdout)?,
    }
    Ok(())
}
