// Round-trips a dataset through the plain-text feature format and runs a
// short federated experiment on the file.

use fedcmc::data::{load_features, synth_clusters, write_features, SynthSpec};
use fedcmc::harness::{run_experiment, DatasetSource, ExperimentConfig};
use fedcmc::numkit::Rng;

pub fn run_example() -> fedcmc::Result<()> {
    let spec = SynthSpec {
        classes: 3,
        features: 5,
        per_class_counts: vec![120, 80, 60],
        separation: 3.0,
        noise: 1.0,
    };
    let ds = synth_clusters(&mut Rng::new(8), &spec)?;
    let path = std::env::temp_dir().join(format!("fedcmc-features-{}.txt", std::process::id()));
    write_features(&ds, &path)?;
    let back = load_features(&path)?;
    assert_eq!(back.labels, ds.labels);
    println!("{} samples written to and read back from {}", back.len(), path.display());

    let cfg = ExperimentConfig {
        dataset: DatasetSource::File(path.clone()),
        classes: 3,
        features: 5,
        hidden: 16,
        repr: 4,
        clients: 4,
        alpha: 0.5,
        rounds: 5,
        ..ExperimentConfig::default()
    };
    let run = run_experiment(&cfg);
    std::fs::remove_file(&path)?;
    let run = run?;
    for log in &run.rounds {
        println!("round {}: macro-F1 {:.4}", log.round, log.eval.macro_f1);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("feature file example failed");
}
