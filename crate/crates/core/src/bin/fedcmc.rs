use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedcmc::harness::{self, ExperimentConfig};
use fedcmc::{Result, SelectionMode};

#[derive(Parser)]
#[command(name = "fedcmc", about = "Federated learning with major classifier vectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment with the configured mode.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run several selection modes on shared partitions.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "major,minor,random,none")]
        modes: Vec<SelectionMode>,
        /// Seeds to run; defaults to the config seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Sweep mu over 0.1, 0.5, 1.0; one output subdirectory per value.
        #[arg(long)]
        mu_sweep: bool,
        /// Skip the centralized reference rows.
        #[arg(long)]
        no_centralized: bool,
    },
    /// Print the client-by-class count matrix of the partition.
    PartitionStats {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn print_table(rows: &[harness::ComparisonRow]) {
    println!("{:<12} {:>8} {:>6} {:>9} {:>9}", "method", "seed", "mu", "accuracy", "macro_f1");
    for r in rows {
        println!(
            "{:<12} {:>8} {:>6} {:>9.4} {:>9.4}",
            r.method, r.seed, r.mu, r.eval.accuracy, r.eval.macro_f1
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config, cli.seed)?;
            let result = harness::run_experiment(&cfg)?;
            harness::write_outputs(&cli.out, &cfg, std::slice::from_ref(&result), &[])?;
            let e = &result.final_eval;
            println!(
                "{} seed {}: accuracy {:.4} micro_f1 {:.4} macro_f1 {:.4}",
                cfg.mode, cfg.seed, e.accuracy, e.micro_f1, e.macro_f1
            );
        }
        Command::Compare {
            config,
            modes,
            seeds,
            mu_sweep,
            no_centralized,
        } => {
            let cfg = load(&config, cli.seed)?;
            let seeds = if seeds.is_empty() { vec![cfg.seed] } else { seeds };
            let mus: Vec<f64> = if mu_sweep {
                harness::MU_SWEEP.to_vec()
            } else {
                vec![cfg.mu]
            };
            for (i, &mu) in mus.iter().enumerate() {
                let mu_cfg = ExperimentConfig { mu, ..cfg.clone() };
                // `none` ignores mu; run it once.
                let modes: Vec<SelectionMode> = modes
                    .iter()
                    .copied()
                    .filter(|&m| i == 0 || m != SelectionMode::None)
                    .collect();
                let cmp = harness::compare_modes(&mu_cfg, &modes, &seeds, None, !no_centralized && i == 0)?;
                let dir = if mu_sweep { cli.out.join(format!("mu_{mu}")) } else { cli.out.clone() };
                harness::write_outputs(&dir, &mu_cfg, &cmp.runs, &cmp.centralized)?;
                print_table(&cmp.table());
            }
        }
        Command::PartitionStats { config } => {
            let cfg = load(&config, cli.seed)?;
            let setup = harness::prepare(&cfg)?;
            let header: Vec<String> = (0..cfg.classes).map(|c| format!("c{c}")).collect();
            println!("client,{},total", header.join(","));
            for (k, row) in setup.partition.counts.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(usize::to_string).collect();
                println!("{k},{},{}", cells.join(","), row.iter().sum::<usize>());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
