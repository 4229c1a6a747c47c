// Finite-difference check of the combined `ce + mu·con` gradient on a
// small random model.

use fedcmc::model::{self, forward_backward, Dims, FeatureBatch, ModelParams};
use fedcmc::numkit::{Matrix, Rng};
use fedcmc::server::MajorVectors;

pub fn run_example() -> fedcmc::Result<()> {
    let dims = Dims::new(3, 5, 4, 3);
    let mut rng = Rng::new(11);
    let params = model::init(&mut rng, dims)?;
    let x: Vec<f64> = (0..4 * dims.features).map(|_| rng.normal()).collect();
    let batch = FeatureBatch::new(Matrix::from_vec(4, dims.features, x)?, vec![0, 2, 1, 2])?;
    let anchors = MajorVectors::from_initial(params.classifier.weights.clone());

    for mu in [0.0, 0.7] {
        let fb = forward_backward(&params, &batch, Some(&anchors), mu)?;
        let analytic = fb.grads.flatten();
        let flat = params.flatten();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..flat.len() {
            let mut v = flat.clone();
            v[i] += eps;
            let up = forward_backward(&ModelParams::from_flat(dims, &v)?, &batch, Some(&anchors), mu)?;
            v[i] -= 2.0 * eps;
            let down = forward_backward(&ModelParams::from_flat(dims, &v)?, &batch, Some(&anchors), mu)?;
            let numeric = (up.loss.total - down.loss.total) / (2.0 * eps);
            worst = worst.max((numeric - analytic[i]).abs() / analytic[i].abs().max(1.0));
        }
        println!(
            "mu={mu}: ce={:.6} con={:.6} total={:.6}, {} params, max relative error {worst:.2e}",
            fb.loss.ce,
            fb.loss.con,
            fb.loss.total,
            flat.len()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("gradient check failed");
}
