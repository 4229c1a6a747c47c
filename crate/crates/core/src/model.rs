//! One-hidden-layer tanh encoder plus a bias-free linear classifier.
//!
//! The encoder maps an input row `x` (length F) to a representation
//! `h = W2·tanh(W1·x + b1) + b2` (length D). The classifier scores class `c`
//! as `W[c]·h`; class probabilities are the softmax of those scores.
//!
//! Both losses are batch means. The contrastive term is the cross-entropy of
//! softmax(`Θ̂·h`) where `Θ̂` are the frozen anchor vectors; it contributes
//! gradient to the encoder only. The classifier gradient is the
//! cross-entropy gradient alone, whatever `mu` or the anchors are.

use crate::error::{Error, Result};
use crate::losses::{self, LossBreakdown};
use crate::numkit::{axpy, dot, softmax_in_place, Matrix, Rng, Vector};
use crate::server::MajorVectors;

/// Layer sizes: input features, hidden units, representation, classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub features: usize,
    pub hidden: usize,
    pub repr: usize,
    pub classes: usize,
}

impl Dims {
    pub fn new(features: usize, hidden: usize, repr: usize, classes: usize) -> Self {
        Dims {
            features,
            hidden,
            repr,
            classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.features == 0 || self.hidden == 0 || self.repr == 0 {
            return Err(Error::Config(format!("all dims must be >= 1, got {self:?}")));
        }
        if self.classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    /// H×F
    pub w1: Matrix,
    pub b1: Vector,
    /// D×H
    pub w2: Matrix,
    pub b2: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    /// C×D; row `c` is the classifier vector of class `c`.
    pub weights: Matrix,
}

impl ClassifierParams {
    pub fn num_classes(&self) -> usize {
        self.weights.rows()
    }

    pub fn vector(&self, class: usize) -> &[f64] {
        self.weights.row(class)
    }
}

/// Encoder and classifier; the unit exchanged between server and clients.
/// Gradients use the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub encoder: EncoderParams,
    pub classifier: ClassifierParams,
}

impl ModelParams {
    pub fn dims(&self) -> Dims {
        Dims {
            features: self.encoder.w1.cols(),
            hidden: self.encoder.w1.rows(),
            repr: self.encoder.w2.rows(),
            classes: self.classifier.weights.rows(),
        }
    }

    pub fn zeros(dims: Dims) -> Self {
        ModelParams {
            encoder: EncoderParams {
                w1: Matrix::zeros(dims.hidden, dims.features),
                b1: Vector::zeros(dims.hidden),
                w2: Matrix::zeros(dims.repr, dims.hidden),
                b2: Vector::zeros(dims.repr),
            },
            classifier: ClassifierParams {
                weights: Matrix::zeros(dims.classes, dims.repr),
            },
        }
    }

    /// Parameter tensors in a fixed order: w1, b1, w2, b2, classifier.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            self.encoder.w1.as_slice(),
            &self.encoder.b1,
            self.encoder.w2.as_slice(),
            &self.encoder.b2,
            self.classifier.weights.as_slice(),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.encoder.w1.as_mut_slice(),
            &mut self.encoder.b1,
            self.encoder.w2.as_mut_slice(),
            &mut self.encoder.b2,
            self.classifier.weights.as_mut_slice(),
        ]
    }

    pub fn encoder_len(&self) -> usize {
        self.tensors()[..4].iter().map(|t| t.len()).sum()
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn from_flat(dims: Dims, flat: &[f64]) -> Result<Self> {
        let mut p = ModelParams::zeros(dims);
        if flat.len() != p.num_params() {
            return Err(Error::Shape(format!(
                "flat parameter vector has {} entries, expected {}",
                flat.len(),
                p.num_params()
            )));
        }
        let mut offset = 0;
        for t in p.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(p)
    }

    /// `self += alpha · other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &ModelParams) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            axpy(alpha, src, dst);
        }
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.dims() == other.dims()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

/// Inputs (B×F) and their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBatch {
    pub inputs: Matrix,
    pub labels: Vec<usize>,
}

impl FeatureBatch {
    pub fn new(inputs: Matrix, labels: Vec<usize>) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        if inputs.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} input rows but {} labels",
                inputs.rows(),
                labels.len()
            )));
        }
        Ok(FeatureBatch { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn hidden_activation(p: &EncoderParams, x: &[f64]) -> Vec<f64> {
    p.w1
        .row_iter()
        .zip(p.b1.iter())
        .map(|(row, b)| (dot(row, x) + b).tanh())
        .collect()
}

fn project(p: &EncoderParams, a: &[f64]) -> Vec<f64> {
    p.w2
        .row_iter()
        .zip(p.b2.iter())
        .map(|(row, b)| dot(row, a) + b)
        .collect()
}

/// Representation `h` of one input row.
pub fn encode(p: &EncoderParams, x: &[f64]) -> Result<Vector> {
    let (h, f) = p.w1.shape();
    if x.len() != f || p.b1.len() != h || p.w2.cols() != h || p.b2.len() != p.w2.rows() {
        return Err(Error::Shape(format!(
            "encoder expects input length {f}, got {}",
            x.len()
        )));
    }
    Ok(Vector(project(p, &hidden_activation(p, x))))
}

/// Class scores `W[c]·h`.
pub fn logits(c: &ClassifierParams, h: &[f64]) -> Result<Vector> {
    c.weights.matvec(h)
}

/// Glorot-uniform weights, zero biases.
pub fn init(rng: &mut Rng, dims: Dims) -> Result<ModelParams> {
    dims.validate()?;
    let mut p = ModelParams::zeros(dims);
    glorot(rng, &mut p.encoder.w1);
    glorot(rng, &mut p.encoder.w2);
    glorot(rng, &mut p.classifier.weights);
    for c in 0..dims.classes {
        if p.classifier.vector(c).iter().all(|&w| w == 0.0) {
            return Err(Error::DegenerateClassifier { class: c });
        }
    }
    Ok(p)
}

fn glorot(rng: &mut Rng, m: &mut Matrix) {
    let (fan_out, fan_in) = m.shape();
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for w in m.as_mut_slice() {
        *w = rng.uniform_range(-limit, limit);
    }
}

/// Result of one forward/backward pass over a batch.
#[derive(Debug, Clone)]
pub struct ForwardBackward {
    pub loss: LossBreakdown,
    pub grads: ModelParams,
    /// B×C classifier probabilities.
    pub probs: Matrix,
    /// Some probability at a true label fell below the log floor.
    pub degenerate: bool,
}

/// Combined loss `ce + mu·con` and its gradients.
///
/// `anchors` may be passed with `mu = 0` (the contrastive term is then
/// reported but contributes no gradient); `mu > 0` without anchors is a
/// configuration error.
pub fn forward_backward(
    p: &ModelParams,
    batch: &FeatureBatch,
    anchors: Option<&MajorVectors>,
    mu: f64,
) -> Result<ForwardBackward> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::Config(format!("mu must be >= 0, got {mu}")));
    }
    if mu > 0.0 && anchors.is_none() {
        return Err(Error::Config("mu > 0 requires anchor vectors".into()));
    }
    let dims = p.dims();
    if batch.inputs.cols() != dims.features {
        return Err(Error::Shape(format!(
            "batch has {} features, model expects {}",
            batch.inputs.cols(),
            dims.features
        )));
    }
    if let Some(&bad) = batch.labels.iter().find(|&&y| y >= dims.classes) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for {} classes",
            dims.classes
        )));
    }
    if let Some(a) = anchors {
        if a.vectors.shape() != (dims.classes, dims.repr) {
            return Err(Error::Shape(format!(
                "anchors are {:?}, expected {:?}",
                a.vectors.shape(),
                (dims.classes, dims.repr)
            )));
        }
    }

    let b = batch.len();
    let mut acts = Matrix::zeros(b, dims.hidden);
    let mut reprs = Matrix::zeros(b, dims.repr);
    let mut probs = Matrix::zeros(b, dims.classes);
    let mut anchor_probs = anchors.map(|_| Matrix::zeros(b, dims.classes));

    for i in 0..b {
        let x = batch.inputs.row(i);
        let a = hidden_activation(&p.encoder, x);
        let h = project(&p.encoder, &a);
        let out = probs.row_mut(i);
        for (o, w) in out.iter_mut().zip(p.classifier.weights.row_iter()) {
            *o = dot(w, &h);
        }
        softmax_in_place(out);
        if let (Some(q), Some(anc)) = (anchor_probs.as_mut(), anchors) {
            let out = q.row_mut(i);
            for (o, w) in out.iter_mut().zip(anc.vectors.row_iter()) {
                *o = dot(w, &h);
            }
            softmax_in_place(out);
        }
        acts.row_mut(i).copy_from_slice(&a);
        reprs.row_mut(i).copy_from_slice(&h);
    }

    let ce = losses::cross_entropy(&probs, &batch.labels)?;
    let con = match &anchor_probs {
        Some(q) => Some(losses::cross_entropy(q, &batch.labels)?),
        None => None,
    };
    let degenerate = ce.degenerate || con.as_ref().is_some_and(|c| c.degenerate);
    let loss = LossBreakdown::new(ce.value, con.map_or(0.0, |c| c.value), mu);

    let inv_b = 1.0 / b as f64;
    let mut grads = ModelParams::zeros(dims);
    let mut g_logit = vec![0.0; dims.classes];
    let mut g_anchor = vec![0.0; dims.classes];
    let mut da = vec![0.0; dims.hidden];
    for i in 0..b {
        let y = batch.labels[i];
        let h = reprs.row(i);
        let a = acts.row(i);

        for (g, &pc) in g_logit.iter_mut().zip(probs.row(i)) {
            *g = pc * inv_b;
        }
        g_logit[y] -= inv_b;
        grads.classifier.weights.add_outer(1.0, &g_logit, h);

        let mut dh = p.classifier.weights.matvec_t(&g_logit)?.into_inner();
        if mu > 0.0 {
            let (q, anc) = (anchor_probs.as_ref().unwrap(), anchors.unwrap());
            for (g, &qc) in g_anchor.iter_mut().zip(q.row(i)) {
                *g = qc * inv_b;
            }
            g_anchor[y] -= inv_b;
            let dh_con = anc.vectors.matvec_t(&g_anchor)?;
            axpy(mu, &dh_con, &mut dh);
        }

        axpy(1.0, &dh, &mut grads.encoder.b2);
        grads.encoder.w2.add_outer(1.0, &dh, a);
        da.iter_mut().for_each(|v| *v = 0.0);
        for (r, &dhr) in p.encoder.w2.row_iter().zip(&dh) {
            axpy(dhr, r, &mut da);
        }
        for (d, &ak) in da.iter_mut().zip(a) {
            *d *= 1.0 - ak * ak;
        }
        axpy(1.0, &da, &mut grads.encoder.b1);
        grads.encoder.w1.add_outer(1.0, &da, batch.inputs.row(i));
    }

    Ok(ForwardBackward {
        loss,
        grads,
        probs,
        degenerate,
    })
}

/// Representations of every row of `inputs` (B×D).
pub fn encode_batch(p: &EncoderParams, inputs: &Matrix) -> Result<Matrix> {
    let d = p.w2.rows();
    let mut out = Matrix::zeros(inputs.rows(), d);
    for (i, x) in inputs.row_iter().enumerate() {
        out.row_mut(i).copy_from_slice(&encode(p, x)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dims() -> Dims {
        Dims::new(3, 5, 4, 3)
    }

    fn random_batch(rng: &mut Rng, b: usize, dims: Dims) -> FeatureBatch {
        let inputs: Vec<f64> = (0..b * dims.features).map(|_| rng.normal()).collect();
        let labels = (0..b).map(|_| rng.below(dims.classes)).collect();
        FeatureBatch::new(Matrix::from_vec(b, dims.features, inputs).unwrap(), labels).unwrap()
    }

    fn random_anchors(rng: &mut Rng, dims: Dims) -> MajorVectors {
        let data = (0..dims.classes * dims.repr).map(|_| rng.normal()).collect();
        MajorVectors::from_initial(Matrix::from_vec(dims.classes, dims.repr, data).unwrap())
    }

    /// Scalar-loop reimplementation of the encoder.
    fn encode_naive(p: &EncoderParams, x: &[f64]) -> Vec<f64> {
        let (hn, f) = p.w1.shape();
        let d = p.w2.rows();
        let mut a = vec![0.0; hn];
        for j in 0..hn {
            let mut s = p.b1[j];
            for k in 0..f {
                s += p.w1[(j, k)] * x[k];
            }
            a[j] = s.tanh();
        }
        let mut h = vec![0.0; d];
        for i in 0..d {
            let mut s = p.b2[i];
            for j in 0..hn {
                s += p.w2[(i, j)] * a[j];
            }
            h[i] = s;
        }
        h
    }

    #[test]
    fn encode_zero_network() {
        let p = ModelParams::zeros(small_dims());
        assert_eq!(encode(&p.encoder, &[1.0, -2.0, 3.0]).unwrap().0, vec![0.0; 4]);
    }

    #[test]
    fn encode_identity_config() {
        let enc = EncoderParams {
            w1: Matrix::identity(2),
            b1: Vector::zeros(2),
            w2: Matrix::identity(2),
            b2: Vector::zeros(2),
        };
        assert_eq!(encode(&enc, &[0.0, 0.0]).unwrap().0, vec![0.0, 0.0]);
        assert!(matches!(encode(&enc, &[0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn encode_matches_scalar_loop() {
        let dims = Dims::new(6, 7, 5, 3);
        let p = init(&mut Rng::new(1), dims).unwrap();
        let x = vec![1.0; 6];
        let fast = encode(&p.encoder, &x).unwrap();
        let slow = encode_naive(&p.encoder, &x);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn logits_examples() {
        let c = ClassifierParams {
            weights: Matrix::identity(3),
        };
        assert_eq!(logits(&c, &[1.0, 0.0, 0.0]).unwrap().0, vec![1.0, 0.0, 0.0]);

        let mut rng = Rng::new(7);
        let dims = Dims::new(2, 2, 4, 5);
        let p = init(&mut rng, dims).unwrap();
        let h: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let l = logits(&p.classifier, &h).unwrap();
        for c in 0..5 {
            let mut s = 0.0;
            for k in 0..4 {
                s += p.classifier.weights[(c, k)] * h[k];
            }
            assert!((l[c] - s).abs() < 1e-12);
        }

        let mut doubled = p.classifier.clone();
        for w in doubled.weights.row_mut(2) {
            *w *= 2.0;
        }
        let l2 = logits(&doubled, &h).unwrap();
        for c in 0..5 {
            let expect = if c == 2 { 2.0 * l[c] } else { l[c] };
            assert!((l2[c] - expect).abs() < 1e-12);
        }
        assert!(logits(&p.classifier, &[1.0]).is_err());
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let dims = Dims::new(4, 8, 6, 3);
        let a = init(&mut Rng::new(3), dims).unwrap();
        let b = init(&mut Rng::new(3), dims).unwrap();
        assert_eq!(a, b);
        assert!(a.encoder.b1.iter().all(|&x| x == 0.0));
        assert!(a.encoder.b2.iter().all(|&x| x == 0.0));
        // Per-layer Glorot limits: w1 (4 + 8), w2 (8 + 6), classifier (6 + 3).
        let bound = |fan: usize| (6.0 / fan as f64).sqrt();
        assert!(a.encoder.w1.as_slice().iter().all(|w| w.abs() < bound(12)));
        assert!(a.encoder.w2.as_slice().iter().all(|w| w.abs() < bound(14)));
        assert!(a.classifier.weights.as_slice().iter().all(|w| w.abs() < bound(9)));
        assert!(init(&mut Rng::new(3), Dims::new(4, 8, 6, 1)).is_err());
        assert!(init(&mut Rng::new(3), Dims::new(0, 8, 6, 3)).is_err());
    }

    #[test]
    fn mu_zero_matches_pure_ce_bitwise() {
        let dims = small_dims();
        let mut rng = Rng::new(21);
        let p = init(&mut rng, dims).unwrap();
        let batch = random_batch(&mut rng, 6, dims);
        let anchors = random_anchors(&mut rng, dims);
        let plain = forward_backward(&p, &batch, None, 0.0).unwrap();
        let with = forward_backward(&p, &batch, Some(&anchors), 0.0).unwrap();
        assert_eq!(plain.grads, with.grads);
        assert_eq!(plain.loss.ce, with.loss.ce);
        assert_eq!(plain.loss.total, plain.loss.ce);
    }

    #[test]
    fn classifier_grad_independent_of_mu_and_anchors() {
        let dims = small_dims();
        let mut rng = Rng::new(22);
        let p = init(&mut rng, dims).unwrap();
        let batch = random_batch(&mut rng, 5, dims);
        let copy = MajorVectors::from_initial(p.classifier.weights.clone());
        let other = random_anchors(&mut rng, dims);
        let base = forward_backward(&p, &batch, None, 0.0).unwrap();
        for (anc, mu) in [(&copy, 1.0), (&other, 0.3), (&other, 5.0)] {
            let before = anc.clone();
            let fb = forward_backward(&p, &batch, Some(anc), mu).unwrap();
            assert_eq!(fb.grads.classifier, base.grads.classifier);
            assert_eq!(anc, &before);
            assert_eq!(fb.loss.total, fb.loss.ce + mu * fb.loss.con);
        }
    }

    #[test]
    fn mu_without_anchors_is_config_error() {
        let dims = small_dims();
        let mut rng = Rng::new(23);
        let p = init(&mut rng, dims).unwrap();
        let batch = random_batch(&mut rng, 2, dims);
        assert!(matches!(
            forward_backward(&p, &batch, None, 0.5),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            forward_backward(&p, &batch, None, -1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rejects_bad_labels_and_shapes() {
        let dims = small_dims();
        let mut rng = Rng::new(24);
        let p = init(&mut rng, dims).unwrap();
        let bad = FeatureBatch::new(Matrix::zeros(1, 3), vec![3]).unwrap();
        assert!(forward_backward(&p, &bad, None, 0.0).is_err());
        let wide = FeatureBatch::new(Matrix::zeros(1, 4), vec![0]).unwrap();
        assert!(matches!(
            forward_backward(&p, &wide, None, 0.0),
            Err(Error::Shape(_))
        ));
        let anc = MajorVectors::from_initial(Matrix::zeros(3, 5));
        let ok = FeatureBatch::new(Matrix::zeros(1, 3), vec![0]).unwrap();
        assert!(matches!(
            forward_backward(&p, &ok, Some(&anc), 1.0),
            Err(Error::Shape(_))
        ));
        assert!(FeatureBatch::new(Matrix::zeros(0, 3), vec![]).is_err());
        assert!(FeatureBatch::new(Matrix::zeros(2, 3), vec![0]).is_err());
    }

    #[test]
    fn flatten_round_trip() {
        let dims = small_dims();
        let p = init(&mut Rng::new(4), dims).unwrap();
        let q = ModelParams::from_flat(dims, &p.flatten()).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.num_params(), 5 * 3 + 5 + 4 * 5 + 4 + 3 * 4);
        assert!(ModelParams::from_flat(dims, &[0.0]).is_err());
    }
}
