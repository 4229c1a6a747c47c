// Parses a key=value experiment config, prints the canonical form and
// the partition it produces.

use fedcmc::harness::{prepare, ExperimentConfig};

const CONFIG: &str = "\
# smaller scenario
seed = 7
classes = 4
per_class_counts = 120,90,60,30
clients = 5
alpha = 0.1
rounds = 3
mode = random
";

pub fn run_example() -> fedcmc::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    print!("{}", cfg.to_kv());
    let setup = prepare(&cfg)?;
    println!("train {} / test {}", setup.train.len(), setup.test.len());
    for (k, row) in setup.partition.counts.iter().enumerate() {
        println!("client {k}: {row:?}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("config example failed");
}
