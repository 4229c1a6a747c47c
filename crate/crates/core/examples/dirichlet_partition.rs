// Label-skew partitions at several concentration values, printed as
// per-client class counts.

use fedcmc::data::{partition, synth_clusters, SynthSpec};
use fedcmc::numkit::Rng;

pub fn run_example() -> fedcmc::Result<()> {
    let ds = synth_clusters(
        &mut Rng::new(1),
        &SynthSpec {
            classes: 8,
            features: 16,
            per_class_counts: vec![200; 8],
            separation: 3.0,
            noise: 1.0,
        },
    )?;
    for alpha in [0.05, 0.5, 100.0] {
        let spec = partition(&mut Rng::new(42), &ds, 10, alpha, 10)?;
        spec.verify(&ds)?;
        println!("alpha={alpha}: mean max-class fraction {:.3}", spec.mean_skew());
        for (k, row) in spec.counts.iter().enumerate() {
            println!("  client {k:>2}: {row:?}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("partition example failed");
}
