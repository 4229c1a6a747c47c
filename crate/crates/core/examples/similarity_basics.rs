// Softmax, cosine similarity and the local average similarity of a toy
// classifier. Class 0's vector points away from the others, so it gets
// the lowest score.

use fedcmc::model::ClassifierParams;
use fedcmc::numkit::{cosine, softmax, Matrix};
use fedcmc::server::local_avg_similarity;

pub fn run_example() -> fedcmc::Result<()> {
    let p = softmax(&[1.0, 2.0, 3.0])?;
    println!("softmax([1, 2, 3]) = {:.4?}", p.0);
    println!("cos([1,0],[1,1]) = {:.4}", cosine(&[1.0, 0.0], &[1.0, 1.0])?);

    let classifier = ClassifierParams {
        weights: Matrix::from_rows(&[
            vec![-1.0, 0.0, 0.2],
            vec![0.6, 0.8, 0.0],
            vec![0.8, 0.6, 0.0],
            vec![0.7, 0.7, 0.1],
        ])?,
    };
    let d = local_avg_similarity(&classifier)?;
    for (c, v) in d.iter().enumerate() {
        println!("class {c}: average cosine to other classes {v:+.4}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("similarity example failed");
}
