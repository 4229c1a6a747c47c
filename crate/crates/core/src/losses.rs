//! Loss functions as standalone, batch-mean scalars.

use crate::error::{Error, Result};
use crate::numkit::{axpy, dot, softmax_in_place, Matrix, Vector};
use crate::server::MajorVectors;

/// Probabilities below this are floored before taking the log.
pub const PROB_FLOOR: f64 = 1e-300;

/// Cross-entropy, contrastive and combined loss for one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub ce: f64,
    pub con: f64,
    pub total: f64,
    pub mu: f64,
}

impl LossBreakdown {
    pub fn new(ce: f64, con: f64, mu: f64) -> Self {
        LossBreakdown {
            ce,
            con,
            total: ce + mu * con,
            mu,
        }
    }
}

/// A mean negative log-likelihood; `degenerate` is set when some label
/// probability hit [`PROB_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossEntropy {
    pub value: f64,
    pub degenerate: bool,
}

/// `-(1/B) Σ_i ln probs[i, y_i]`.
pub fn cross_entropy(probs: &Matrix, labels: &[usize]) -> Result<CrossEntropy> {
    check_labels(probs.rows(), probs.cols(), labels)?;
    let mut sum = 0.0;
    let mut degenerate = false;
    for (i, (row, &y)) in probs.row_iter().zip(labels).enumerate() {
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "probability row {i} sums to {total}"
            )));
        }
        let p = row[y];
        if p <= PROB_FLOOR {
            degenerate = true;
        }
        sum -= p.max(PROB_FLOOR).ln();
    }
    Ok(CrossEntropy {
        value: sum / labels.len() as f64,
        degenerate,
    })
}

/// Softmax of `h_i · anchors[c]` for every row of `h_batch` (B×C).
pub fn anchor_probabilities(h_batch: &Matrix, anchors: &MajorVectors) -> Result<Matrix> {
    let a = &anchors.vectors;
    if h_batch.cols() != a.cols() {
        return Err(Error::Shape(format!(
            "representations have dim {}, anchors have dim {}",
            h_batch.cols(),
            a.cols()
        )));
    }
    let mut out = Matrix::zeros(h_batch.rows(), a.rows());
    for (i, h) in h_batch.row_iter().enumerate() {
        let row = out.row_mut(i);
        for (o, v) in row.iter_mut().zip(a.row_iter()) {
            *o = dot(h, v);
        }
        softmax_in_place(row);
    }
    Ok(out)
}

/// Contrastive loss of representations against the anchor vectors:
/// `(1/B) Σ_i -ln softmax(h_i · anchors)[y_i]`, temperature 1.
pub fn contrastive(
    h_batch: &Matrix,
    labels: &[usize],
    anchors: &MajorVectors,
) -> Result<CrossEntropy> {
    check_labels(h_batch.rows(), anchors.vectors.rows(), labels)?;
    cross_entropy(&anchor_probabilities(h_batch, anchors)?, labels)
}

/// Attraction and repulsion acting on one classifier row.
#[derive(Debug, Clone, PartialEq)]
pub struct PullPush {
    pub pull: Vector,
    pub push: Vector,
}

/// Splits the (unaveraged) negative cross-entropy gradient of classifier
/// row `class` into `pull = Σ_{y_i=c} (1-p_ic) h_i` and
/// `push = Σ_{y_i≠c} p_ic h_i`, so that `pull - push = -∂L/∂W[c]` for the
/// summed loss.
pub fn pull_push_decomposition(
    h_batch: &Matrix,
    labels: &[usize],
    probs: &Matrix,
    class: usize,
) -> Result<PullPush> {
    check_labels(h_batch.rows(), probs.cols(), labels)?;
    if probs.rows() != h_batch.rows() {
        return Err(Error::Shape(format!(
            "{} representation rows but {} probability rows",
            h_batch.rows(),
            probs.rows()
        )));
    }
    if class >= probs.cols() {
        return Err(Error::InvalidInput(format!(
            "class {class} out of range for {} classes",
            probs.cols()
        )));
    }
    let d = h_batch.cols();
    let mut pull = Vector::zeros(d);
    let mut push = Vector::zeros(d);
    for ((h, p), &y) in h_batch.row_iter().zip(probs.row_iter()).zip(labels) {
        if y == class {
            axpy(1.0 - p[class], h, &mut pull);
        } else {
            axpy(p[class], h, &mut push);
        }
    }
    Ok(PullPush { pull, push })
}

fn check_labels(rows: usize, classes: usize, labels: &[usize]) -> Result<()> {
    if rows == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if rows != labels.len() {
        return Err(Error::Shape(format!(
            "{rows} rows but {} labels",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, Dims, FeatureBatch};
    use crate::numkit::Rng;

    fn anchors(rows: &[Vec<f64>]) -> MajorVectors {
        MajorVectors::from_initial(Matrix::from_rows(rows).unwrap())
    }

    #[test]
    fn cross_entropy_examples() {
        let uniform = Matrix::from_vec(3, 4, vec![0.25; 12]).unwrap();
        let ce = cross_entropy(&uniform, &[0, 1, 3]).unwrap();
        assert!((ce.value - 4f64.ln()).abs() < 1e-15);
        assert!(!ce.degenerate);

        let onehot = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(cross_entropy(&onehot, &[0, 1]).unwrap().value, 0.0);

        let p = Matrix::from_rows(&[vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        let ce = cross_entropy(&p, &[0, 1]).unwrap().value;
        assert!((ce - 0.289_909_247_626_471_1).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_floors_zero_probability() {
        let p = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let ce = cross_entropy(&p, &[1]).unwrap();
        assert!(ce.degenerate);
        assert!((ce.value - (-PROB_FLOOR.ln())).abs() < 1e-9);
        assert!(ce.value.is_finite());
    }

    #[test]
    fn cross_entropy_rejects_bad_input() {
        let p = Matrix::from_rows(&[vec![0.5, 0.6]]).unwrap();
        assert!(matches!(cross_entropy(&p, &[0]), Err(Error::InvalidInput(_))));
        let p = Matrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert!(cross_entropy(&p, &[2]).is_err());
        assert!(matches!(cross_entropy(&p, &[0, 1]), Err(Error::Shape(_))));
    }

    #[test]
    fn contrastive_examples() {
        // h orthogonal to every anchor: uniform over 5 classes.
        let h = Matrix::from_rows(&[vec![0.0, 0.0, 1.0]]).unwrap();
        let a = anchors(&vec![vec![1.0, 0.0, 0.0]; 5]);
        let l = contrastive(&h, &[2], &a).unwrap().value;
        assert!((l - 5f64.ln()).abs() < 1e-15);

        // margin 50 between the true anchor and the rest.
        let h = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let a = anchors(&[vec![50.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
        assert!(contrastive(&h, &[0], &a).unwrap().value < 1e-6);

        let a = anchors(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let l = contrastive(&h, &[0], &a).unwrap().value;
        let e = std::f64::consts::E;
        assert!((l - (-(e / (e + 1.0)).ln())).abs() < 1e-15);
        assert!((l - 0.313_261_687_518_222_86).abs() < 1e-15);

        let bad = anchors(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert!(matches!(contrastive(&h, &[0], &bad), Err(Error::Shape(_))));
    }

    #[test]
    fn contrastive_monotone_in_true_logit() {
        let h = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let mut last = f64::INFINITY;
        for s in [-2.0, -0.5, 0.0, 0.5, 1.0, 3.0] {
            let a = anchors(&[vec![s, 0.0], vec![0.0, 1.0], vec![0.3, 2.0]]);
            let l = contrastive(&h, &[0], &a).unwrap().value;
            assert!(l < last);
            last = l;
        }
    }

    #[test]
    fn pull_push_edge_cases() {
        let h = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let p = Matrix::from_rows(&[vec![0.6, 0.4], vec![0.1, 0.9]]).unwrap();
        let pp = pull_push_decomposition(&h, &[1, 1], &p, 0).unwrap();
        assert_eq!(pp.pull.0, vec![0.0, 0.0]);

        let perfect = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let pp = pull_push_decomposition(&h, &[0, 0], &perfect, 0).unwrap();
        assert!(pp.pull.iter().chain(pp.push.iter()).all(|x| x.abs() < 1e-15));

        assert!(pull_push_decomposition(&h, &[0, 0], &p, 2).is_err());
    }

    #[test]
    fn pull_push_reassembles_classifier_gradient() {
        let dims = Dims::new(4, 6, 3, 4);
        let mut rng = Rng::new(5);
        for _ in 0..5 {
            let p = model::init(&mut rng, dims).unwrap();
            let b = 7;
            let x: Vec<f64> = (0..b * dims.features).map(|_| rng.normal()).collect();
            let labels: Vec<usize> = (0..b).map(|_| rng.below(dims.classes)).collect();
            let batch =
                FeatureBatch::new(Matrix::from_vec(b, dims.features, x).unwrap(), labels.clone())
                    .unwrap();
            let fb = model::forward_backward(&p, &batch, None, 0.0).unwrap();
            let h = model::encode_batch(&p.encoder, &batch.inputs).unwrap();
            for c in 0..dims.classes {
                let pp = pull_push_decomposition(&h, &labels, &fb.probs, c).unwrap();
                let g = fb.grads.classifier.weights.row(c);
                for k in 0..dims.repr {
                    let reassembled = pp.pull[k] - pp.push[k];
                    assert!((reassembled + b as f64 * g[k]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn breakdown_identity() {
        let l = LossBreakdown::new(0.4, 1.2, 0.7);
        assert_eq!(l.total, 0.4 + 0.7 * 1.2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use crate::numkit::Rng;

        proptest! {
            #[test]
            fn contrastive_permutation_invariant(seed in any::<u64>(), b in 1usize..8) {
                let mut rng = Rng::new(seed);
                let (d, c) = (3, 4);
                let hv: Vec<f64> = (0..b * d).map(|_| rng.normal()).collect();
                let av: Vec<f64> = (0..c * d).map(|_| rng.normal()).collect();
                let labels: Vec<usize> = (0..b).map(|_| rng.below(c)).collect();
                let h = Matrix::from_vec(b, d, hv).unwrap();
                let a = MajorVectors::from_initial(Matrix::from_vec(c, d, av).unwrap());
                let mut order: Vec<usize> = (0..b).collect();
                rng.shuffle(&mut order);
                let mut hp = Matrix::zeros(b, d);
                let mut lp = vec![0; b];
                for (dst, &src) in order.iter().enumerate() {
                    hp.row_mut(dst).copy_from_slice(h.row(src));
                    lp[dst] = labels[src];
                }
                let l1 = contrastive(&h, &labels, &a).unwrap().value;
                let l2 = contrastive(&hp, &lp, &a).unwrap().value;
                prop_assert!((l1 - l2).abs() < 1e-12);
                prop_assert!(l1 >= 0.0);
            }
        }
    }
}
