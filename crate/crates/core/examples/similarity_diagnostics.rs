// How client similarity scores relate to local label counts over the
// first rounds of one run.

use fedcmc::harness::{diagnostics, run_experiment, ExperimentConfig};

pub fn run_example() -> fedcmc::Result<()> {
    let cfg = ExperimentConfig {
        rounds: 8,
        ..ExperimentConfig::default()
    };
    let run = run_experiment(&cfg)?;
    let show = |v: Option<f64>| v.map_or("  n/a ".to_string(), |x| format!("{x:+.3}"));
    println!("round  across-clients  within-client  global  spread");
    for log in &run.rounds {
        let s = diagnostics::observation_stats(&run.partition.counts, log);
        println!(
            "{:>5}  {:>14}  {:>13}  {:>6}  {:.4}",
            s.round,
            show(s.across_clients),
            show(s.within_client),
            show(s.global),
            s.spread
        );
    }
    println!(
        "rounds 1-5 mean across-client correlation: {}",
        show(diagnostics::mean_across_client_correlation(&run, 1, 5))
    );
    if let Some(last) = run.rounds.last() {
        println!("anchor sources after round {}: {:?}", last.round, last.provenance);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("diagnostics example failed");
}
