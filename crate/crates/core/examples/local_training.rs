// One client's local update with and without the anchor term. The
// classifier update is identical in both; only the encoder sees the
// contrastive gradient.

use fedcmc::client::{local_training, ClientConfig};
use fedcmc::data::{synth_clusters, SynthSpec};
use fedcmc::metrics::evaluate;
use fedcmc::model::{self, Dims};
use fedcmc::numkit::Rng;
use fedcmc::server::MajorVectors;

pub fn run_example() -> fedcmc::Result<()> {
    let spec = SynthSpec {
        classes: 4,
        features: 8,
        per_class_counts: vec![60, 40, 20, 10],
        separation: 3.0,
        noise: 1.0,
    };
    let shard = synth_clusters(&mut Rng::new(3), &spec)?;
    let global = model::init(&mut Rng::new(4), Dims::new(8, 16, 6, 4))?;
    let anchors = MajorVectors::from_initial(global.classifier.weights.clone());

    for mu in [0.0, 1.0] {
        let cfg = ClientConfig::new(0.01, 5, 8, mu);
        let out = local_training(&global, Some(&anchors), &shard, &cfg, &mut Rng::new(9))?;
        let eval = evaluate(&out.params, &shard)?;
        println!(
            "mu={mu}: mean ce {:.4}, mean con {:.4}, train macro-F1 {:.3}",
            out.mean_ce, out.mean_con, eval.macro_f1
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("local training example failed");
}
