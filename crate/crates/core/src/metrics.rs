//! Evaluation metrics and the centralized reference run.

use crate::client::{local_training, ClientConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{encode, logits, ModelParams};
use crate::numkit::Rng;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_predictions(classes: usize, truth: &[usize], predicted: &[usize]) -> Self {
        let mut m = ConfusionMatrix::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            m.counts[t][p] += 1;
        }
        m
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.classes()).map(|c| self.counts[c][c]).sum()
    }

    fn predicted(&self, c: usize) -> usize {
        self.counts.iter().map(|r| r[c]).sum()
    }

    fn actual(&self, c: usize) -> usize {
        self.counts[c].iter().sum()
    }

    /// 0 when nothing was predicted as `c`.
    pub fn precision(&self, c: usize) -> f64 {
        ratio(self.counts[c][c], self.predicted(c))
    }

    /// 0 when class `c` never occurs.
    pub fn recall(&self, c: usize) -> f64 {
        ratio(self.counts[c][c], self.actual(c))
    }

    pub fn f1(&self, c: usize) -> f64 {
        let tp = self.counts[c][c];
        ratio(2 * tp, self.predicted(c) + self.actual(c))
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct(), self.total())
    }

    /// Pooled over all decisions: `2·TP / (2·TP + FP + FN)`. With one label
    /// per sample FP and FN both equal the number of errors.
    pub fn micro_f1(&self) -> f64 {
        let tp = self.correct();
        let errors = self.total() - tp;
        ratio(2 * tp, 2 * tp + 2 * errors)
    }

    /// Unweighted mean of per-class F1; classes with no support and no
    /// predictions contribute 0.
    pub fn macro_f1(&self) -> f64 {
        let c = self.classes();
        (0..c).map(|k| self.f1(k)).sum::<f64>() / c as f64
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
}

impl Evaluation {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        Evaluation {
            accuracy: confusion.accuracy(),
            micro_f1: confusion.micro_f1(),
            macro_f1: confusion.macro_f1(),
            confusion,
        }
    }
}

/// Arg-max class; ties go to the lowest index.
pub fn predict(params: &ModelParams, x: &[f64]) -> Result<usize> {
    let h = encode(&params.encoder, x)?;
    let l = logits(&params.classifier, &h)?;
    let mut best = 0;
    for c in 1..l.len() {
        if l[c] > l[best] {
            best = c;
        }
    }
    Ok(best)
}

pub fn evaluate(params: &ModelParams, ds: &Dataset) -> Result<Evaluation> {
    if ds.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate on an empty dataset".into()));
    }
    let predicted = ds
        .features
        .row_iter()
        .map(|x| predict(params, x))
        .collect::<Result<Vec<_>>>()?;
    let cm = ConfusionMatrix::from_predictions(ds.num_classes, &ds.labels, &predicted);
    Ok(Evaluation::from_confusion(cm))
}

/// Single-site SGD on cross-entropy only, starting from `init`.
pub fn centralized_train(
    init: &ModelParams,
    ds: &Dataset,
    learning_rate: f64,
    batch_size: usize,
    epochs: usize,
    rng: &mut Rng,
) -> Result<ModelParams> {
    if epochs == 0 {
        return Ok(init.clone());
    }
    let cfg = ClientConfig::new(learning_rate, epochs, batch_size, 0.0);
    Ok(local_training(init, None, ds, &cfg, rng)?.params)
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// either side is constant or fewer than two points are given.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}
