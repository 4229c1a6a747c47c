// Server-side anchor selection from three client classifiers. Per class,
// `major` takes the row from the client where that class vector is least
// similar to the client's other vectors, `minor` from the most similar
// one and `random` from a uniformly drawn client.

use fedcmc::model::ClassifierParams;
use fedcmc::numkit::{Matrix, Rng};
use fedcmc::server::{local_similarity_matrix, select_vectors};
use fedcmc::SelectionMode;

fn client(rows: &[[f64; 2]; 3]) -> fedcmc::Result<ClassifierParams> {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    Ok(ClassifierParams {
        weights: Matrix::from_rows(&rows)?,
    })
}

pub fn run_example() -> fedcmc::Result<()> {
    let clients = vec![
        client(&[[1.0, 0.0], [0.2, 1.0], [0.3, 1.0]])?,
        client(&[[1.0, 0.3], [-1.0, 0.1], [0.9, 0.5]])?,
        client(&[[0.8, 0.6], [0.7, 0.7], [0.0, -1.0]])?,
    ];
    let sim = local_similarity_matrix(&clients)?;
    for k in 0..sim.rows() {
        println!("client {k} similarities {:+.3?}", sim.row(k));
    }
    for mode in [SelectionMode::Major, SelectionMode::Minor, SelectionMode::Random] {
        let anchors = select_vectors(mode, &clients, &mut Rng::new(5))?.expect("anchors");
        println!("{mode:>6}: source client per class {:?}", anchors.provenance);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("selection example failed");
}
