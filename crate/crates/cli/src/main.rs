use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use arqsched::Limits;
use arqsched_cli::commands::{self, RunOptions};
use arqsched_cli::config::ExperimentConfig;

/// Opportunistic scheduling with delayed ARQ feedback: values, capacities
/// and reproduction runs, written as CSV.
#[derive(Parser)]
#[command(name = "arqsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// ON-to-ON transition probability.
    #[arg(long, global = true)]
    p: Option<String>,
    /// OFF-to-ON transition probability.
    #[arg(long, global = true)]
    r: Option<String>,
    /// Second user's OFF-to-ON probability (two-channel counterexample).
    #[arg(long, global = true)]
    r2: Option<String>,
    #[arg(long, global = true)]
    n: Option<String>,
    /// Horizon in slots (or the largest horizon for `figure1`).
    #[arg(long, global = true)]
    m: Option<String>,
    /// Delay pmf `P(0),P(1),...`; fractions like `1/3` are accepted.
    #[arg(long, global = true)]
    delay: Option<String>,
    /// Initial beliefs as a comma list, or `steady`.
    #[arg(long, global = true)]
    pi: Option<String>,
    /// Policies separated by `;`: greedy, greedy-queue, random, fixed:<i>,
    /// alpha:<a1,a2,a3,a4>.
    #[arg(long, global = true)]
    policy: Option<String>,
    /// `arq` (default) or `genie`.
    #[arg(long, global = true)]
    observation: Option<String>,
    #[arg(long, global = true)]
    episodes: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fill the runtime_ms column (makes output run-dependent).
    #[arg(long, global = true)]
    timing: bool,
    #[arg(long, global = true)]
    max_users: Option<usize>,
    #[arg(long, global = true)]
    max_horizon: Option<u32>,
    #[arg(long, global = true)]
    max_delay: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Two-user sum capacity and genie sum capacity (plus bounds for n > 2).
    Capacity,
    /// Closed-form genie value.
    Genie,
    /// Exact optimal value by expectimax.
    Optimal,
    /// Exact value of each policy.
    Value,
    /// Monte Carlo value of each policy.
    Simulate {
        /// Write per-slot decisions of the first episodes here.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        log_episodes: usize,
    },
    /// Inner and outer capacity-region bounds.
    Region {
        /// Also write a gnuplot script (two users only).
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Closed-form greedy counterexample with its exact cross-check.
    Counterexample {
        /// n3-delay1-m4, general-m or nonidentical-n2.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Reproduce one of the comparison tables.
    Table {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        id: u8,
        /// One-based rows, comma separated; all rows when absent.
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<usize>>,
    },
    /// Rate against horizon for genie, delayed-ARQ optimal and random
    /// scheduling.
    Figure1,
}

fn resolve(common: &Common, kind: Option<&str>) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let flags = [
        ("kind", kind),
        ("n", common.n.as_deref()),
        ("m", common.m.as_deref()),
        ("p", common.p.as_deref()),
        ("r", common.r.as_deref()),
        ("r2", common.r2.as_deref()),
        ("delay", common.delay.as_deref()),
        ("pi", common.pi.as_deref()),
        ("policy", common.policy.as_deref()),
        ("observation", common.observation.as_deref()),
        ("episodes", common.episodes.as_deref()),
        ("seed", common.seed.as_deref()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, v).with_context(|| format!("--{k}"))?;
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let kind = match &cli.command {
        Command::Counterexample { kind } => kind.as_deref(),
        _ => None,
    };
    let cfg = resolve(c, kind)?;
    let mut limits = Limits::default();
    if let Some(v) = c.max_users {
        limits.max_users = v;
    }
    if let Some(v) = c.max_horizon {
        limits.max_horizon = v;
    }
    if let Some(v) = c.max_delay {
        limits.max_delay = v;
    }
    let opts = RunOptions { limits, timing: c.timing };

    let mut buf = Vec::new();
    match &cli.command {
        Command::Capacity => commands::capacity(&cfg, &mut buf)?,
        Command::Genie => commands::genie(&cfg, opts, &mut buf)?,
        Command::Optimal => commands::optimal(&cfg, opts, &mut buf)?,
        Command::Value => commands::value(&cfg, opts, &mut buf)?,
        Command::Simulate { log, log_episodes } => {
            commands::simulate(&cfg, opts, log.as_deref().map(|p| (p, *log_episodes)), &mut buf)?
        }
        Command::Region { plot } => commands::region(&cfg, plot.as_deref(), &mut buf)?,
        Command::Counterexample { .. } => commands::counterexample(&cfg, &mut buf)?,
        Command::Table { id, rows } => commands::table(*id, &cfg, rows.clone(), opts, &mut buf)?,
        Command::Figure1 => commands::figure1(&cfg, &mut buf)?,
    }
    match &c.out {
        Some(path) => std::fs::write(path, &buf).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
