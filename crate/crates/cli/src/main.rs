use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use radar_cbba::sim::{generate_scenario, run_to_dir, GeneratorSpec, RunOptions, Scenario, Topology, DEFAULT_ARENA};
use radar_cbba::Execution;

/// Decentralized radar target allocation simulator.
#[derive(Parser)]
#[command(name = "radar-sim", version)]
struct Cli {
    /// Run radars and oracle subtrees on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write metrics, comparisons, traces and snapshots.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of steps.
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Compare with the centralized optimum every N steps (0 disables).
        #[arg(long, default_value_t = 10)]
        compare_every: u64,
        /// Write an SVG snapshot every N steps (0 disables).
        #[arg(long, default_value_t = 0)]
        snapshot_every: u64,
        /// Write every exchanged message to trace.jsonl.
        #[arg(long)]
        trace: bool,
    },
    /// Generate a random scenario file.
    GenScenario {
        #[arg(long)]
        radars: usize,
        #[arg(long)]
        targets: usize,
        /// COMPLETE, LINE, RING or RANDOM_CONNECTED.
        #[arg(long, default_value = "COMPLETE")]
        topology: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Side of the square arena in metres.
        #[arg(long, default_value_t = DEFAULT_ARENA)]
        arena: f64,
        #[arg(long, default_value_t = 100)]
        steps: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Simulate {
            scenario,
            seed,
            steps,
            out,
            compare_every,
            snapshot_every,
            trace,
        } => {
            let text = std::fs::read_to_string(&scenario)
                .with_context(|| format!("reading {}", scenario.display()))?;
            let mut s = Scenario::from_json(&text).with_context(|| format!("loading {}", scenario.display()))?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(steps) = steps {
                s.steps = steps;
            }
            let options = RunOptions {
                compare_every,
                snapshot_every,
                trace,
                exec,
                ..RunOptions::new(out)
            };
            let summary = run_to_dir(s, &options)?;
            if let Some(last) = summary.metrics.last() {
                println!(
                    "{} steps: utility {:.4}, main coverage {:.3}, optional coverage {:.3}, mean load {:.3}, conflicts {}",
                    summary.steps,
                    last.total_utility,
                    last.coverage_main,
                    last.coverage_optional,
                    last.mean_load,
                    last.conflicts
                );
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
        }
        Command::GenScenario {
            radars,
            targets,
            topology,
            seed,
            arena,
            steps,
            out,
        } => {
            let spec = GeneratorSpec {
                n_radars: radars,
                n_targets: targets,
                arena,
                seed,
                topology: topology.parse::<Topology>()?,
                steps,
            };
            let scenario = generate_scenario(&spec)?;
            std::fs::write(&out, scenario.to_json()).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
