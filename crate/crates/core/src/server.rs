//! Server side of a round: weighted aggregation, classifier-vector
//! similarity, and ensemble selection of anchor vectors.
//!
//! The local average similarity of class `c` on client `k` is the mean
//! cosine similarity between that client's class-`c` classifier vector and
//! its other class vectors. A client that saw many class-`c` samples tends
//! to have a well-separated, low-similarity class-`c` vector; the major
//! vector of class `c` is copied verbatim from the client minimizing it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{ClassifierParams, ModelParams};
use crate::numkit::{cosine, Matrix, Rng, Vector};

/// How anchor vectors are chosen each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionMode {
    /// Per class, the client with the lowest local average similarity.
    Major,
    /// Per class, the client with the highest local average similarity.
    Minor,
    /// Per class, a uniformly random client.
    Random,
    /// No anchors: plain FedAvg.
    None,
}

impl SelectionMode {
    pub const ALL: [SelectionMode; 4] = [
        SelectionMode::Major,
        SelectionMode::Minor,
        SelectionMode::Random,
        SelectionMode::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Major => "major",
            SelectionMode::Minor => "minor",
            SelectionMode::Random => "random",
            SelectionMode::None => "none",
        }
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "major" => Ok(SelectionMode::Major),
            "minor" => Ok(SelectionMode::Minor),
            "random" => Ok(SelectionMode::Random),
            "none" => Ok(SelectionMode::None),
            other => Err(Error::Config(format!(
                "unknown selection mode {other:?} (expected major, minor, random or none)"
            ))),
        }
    }
}

/// Anchor vectors (C×D) distributed to clients, one row per class.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorVectors {
    pub vectors: Matrix,
    /// Client each row was copied from; `None` for rows taken from the
    /// initial global classifier.
    pub provenance: Vec<Option<usize>>,
}

impl MajorVectors {
    /// Anchors equal to a global classifier matrix (round 0).
    pub fn from_initial(vectors: Matrix) -> Self {
        let provenance = vec![None; vectors.rows()];
        MajorVectors {
            vectors,
            provenance,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.vectors.rows()
    }
}

/// Local (K×C) and global (C) average similarities for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub local: Matrix,
    pub global: Vector,
    pub round: usize,
}

/// Weighted parameter average `Σ_k w_k θ_k`, summed in client order.
pub fn aggregate(clients: &[ModelParams], weights: &[f64]) -> Result<ModelParams> {
    let first = clients
        .first()
        .ok_or_else(|| Error::Aggregation("no client parameters".into()))?;
    check_weights(weights, clients.len())?;
    if let Some(k) = clients.iter().position(|c| !c.same_shape(first)) {
        return Err(Error::Aggregation(format!(
            "client {k} has shape {:?}, client 0 has {:?}",
            clients[k].dims(),
            first.dims()
        )));
    }
    let mut out = ModelParams::zeros(first.dims());
    for (c, &w) in clients.iter().zip(weights) {
        out.add_scaled(w, c);
    }
    Ok(out)
}

fn check_weights(weights: &[f64], k: usize) -> Result<()> {
    if weights.len() != k {
        return Err(Error::Aggregation(format!(
            "{} weights for {k} clients",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::Aggregation("weights must be nonnegative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Aggregation(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// `d_c = (1/(C-1)) Σ_{i≠c} cos(W[c], W[i])` for every class.
pub fn local_avg_similarity(classifier: &ClassifierParams) -> Result<Vector> {
    let w = &classifier.weights;
    let c = w.rows();
    if c < 2 {
        return Err(Error::InvalidInput(format!(
            "similarity needs >= 2 classes, got {c}"
        )));
    }
    if let Some(bad) = (0..c).find(|&i| w.row(i).iter().all(|&x| x == 0.0)) {
        return Err(Error::DegenerateClassifier { class: bad });
    }
    let mut out = vec![0.0; c];
    for i in 0..c {
        for j in (i + 1)..c {
            let s = cosine(w.row(i), w.row(j))?;
            out[i] += s;
            out[j] += s;
        }
    }
    let denom = (c - 1) as f64;
    Ok(Vector(out.into_iter().map(|s| s / denom).collect()))
}

/// `d_c = Σ_k w_k · local[k][c]` (a convex combination over clients).
pub fn global_avg_similarity(local: &Matrix, weights: &[f64]) -> Result<Vector> {
    if weights.len() != local.rows() {
        return Err(Error::Shape(format!(
            "{} weights for {} similarity rows",
            weights.len(),
            local.rows()
        )));
    }
    let mut out = vec![0.0; local.cols()];
    for (row, &w) in local.row_iter().zip(weights) {
        for (o, &d) in out.iter_mut().zip(row) {
            *o += w * d;
        }
    }
    Ok(Vector(out))
}

/// Local similarity rows of every client stacked into a K×C matrix.
pub fn local_similarity_matrix(classifiers: &[ClassifierParams]) -> Result<Matrix> {
    let rows = classifiers
        .iter()
        .map(|c| local_avg_similarity(c).map(Vector::into_inner))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows)
}

pub fn similarity_report(
    classifiers: &[ClassifierParams],
    weights: &[f64],
    round: usize,
) -> Result<SimilarityReport> {
    let local = local_similarity_matrix(classifiers)?;
    let global = global_avg_similarity(&local, weights)?;
    Ok(SimilarityReport {
        local,
        global,
        round,
    })
}

/// Picks anchor vectors from client classifiers; `None` for
/// [`SelectionMode::None`].
pub fn select_vectors(
    mode: SelectionMode,
    classifiers: &[ClassifierParams],
    rng: &mut Rng,
) -> Result<Option<MajorVectors>> {
    if mode == SelectionMode::None {
        return Ok(None);
    }
    let local = local_similarity_matrix(classifiers)?;
    select_with_similarities(mode, classifiers, &local, rng)
}

/// As [`select_vectors`], reusing an already computed K×C similarity matrix.
pub fn select_with_similarities(
    mode: SelectionMode,
    classifiers: &[ClassifierParams],
    local: &Matrix,
    rng: &mut Rng,
) -> Result<Option<MajorVectors>> {
    if mode == SelectionMode::None {
        return Ok(None);
    }
    let k = classifiers.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "selection needs >= 2 clients, got {k}"
        )));
    }
    let (c, d) = classifiers[0].weights.shape();
    if classifiers.iter().any(|cl| cl.weights.shape() != (c, d)) || local.shape() != (k, c) {
        return Err(Error::Shape("client classifiers differ in shape".into()));
    }
    let mut vectors = Matrix::zeros(c, d);
    let mut provenance = Vec::with_capacity(c);
    for class in 0..c {
        let source = match mode {
            SelectionMode::Major => extreme_client(local, class, |cand, best| cand < best),
            SelectionMode::Minor => extreme_client(local, class, |cand, best| cand > best),
            SelectionMode::Random => rng.below(k),
            SelectionMode::None => unreachable!(),
        };
        vectors
            .row_mut(class)
            .copy_from_slice(classifiers[source].vector(class));
        provenance.push(Some(source));
    }
    Ok(Some(MajorVectors {
        vectors,
        provenance,
    }))
}

/// First client (lowest index) whose column value beats all earlier ones.
fn extreme_client(local: &Matrix, class: usize, better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for k in 1..local.rows() {
        if better(local[(k, class)], local[(best, class)]) {
            best = k;
        }
    }
    best
}

/// Floats sent to one client in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Payload {
    pub encoder: usize,
    pub classifier: usize,
    pub anchors: usize,
}

impl Payload {
    pub fn total(&self) -> usize {
        self.encoder + self.classifier + self.anchors
    }
}

pub fn payload(global: &ModelParams, anchors: Option<&MajorVectors>) -> Payload {
    Payload {
        encoder: global.encoder_len(),
        classifier: global.classifier.weights.as_slice().len(),
        anchors: anchors.map_or(0, |a| a.vectors.as_slice().len()),
    }
}
