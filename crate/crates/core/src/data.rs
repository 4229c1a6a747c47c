//! Datasets, the feature-file format, and Dirichlet label partitioning.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::FeatureBatch;
use crate::numkit::{dirichlet, dot, norm, Matrix, Rng};

/// Labelled feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    /// Validates labels and that every class occurs at least once.
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let ds = Dataset::from_parts(features, labels, num_classes)?;
        if let Some(c) = ds.class_counts().iter().position(|&n| n == 0) {
            return Err(Error::InvalidInput(format!("class {c} has no samples")));
        }
        Ok(ds)
    }

    /// Like [`Dataset::new`] but allows classes with no samples (held-out
    /// splits of rare classes).
    pub fn from_parts(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// `N^c` for every class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Indices of each class, ascending.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            out[y].push(i);
        }
        out
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let f = self.num_features();
        let mut data = Vec::with_capacity(indices.len() * f);
        for &i in indices {
            data.extend_from_slice(self.features.row(i));
        }
        Dataset {
            features: Matrix::from_vec(indices.len(), f, data).expect("subset shape"),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    pub fn batch(&self, indices: &[usize]) -> Result<FeatureBatch> {
        let sub = self.subset(indices);
        FeatureBatch::new(sub.features, sub.labels)
    }

    pub fn as_batch(&self) -> Result<FeatureBatch> {
        FeatureBatch::new(self.features.clone(), self.labels.clone())
    }
}

/// Parameters of the Gaussian-cluster generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub features: usize,
    pub per_class_counts: Vec<usize>,
    /// Distance of each class mean from the origin.
    pub separation: f64,
    /// Per-coordinate standard deviation around the class mean.
    pub noise: f64,
}

const DIRECTION_RETRIES: usize = 1000;
const MAX_DIRECTION_DOT: f64 = 0.5;

/// Isotropic Gaussian clusters, one per class, with class means at
/// `separation · u_c` for random unit directions `u_c` whose pairwise dot
/// products are below 0.5.
pub fn synth_clusters(rng: &mut Rng, spec: &SynthSpec) -> Result<Dataset> {
    if !(spec.separation > 0.0) || !(spec.noise > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "separation and noise must be positive, got {} and {}",
            spec.separation, spec.noise
        )));
    }
    if spec.per_class_counts.len() != spec.classes {
        return Err(Error::InvalidParameter(format!(
            "{} per-class counts for {} classes",
            spec.per_class_counts.len(),
            spec.classes
        )));
    }
    if spec.per_class_counts.contains(&0) {
        return Err(Error::InvalidParameter("every class needs >= 1 sample".into()));
    }
    if spec.features == 0 {
        return Err(Error::InvalidParameter("features must be >= 1".into()));
    }

    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(spec.classes);
    for c in 0..spec.classes {
        let mut placed = false;
        for _ in 0..DIRECTION_RETRIES {
            let mut u: Vec<f64> = (0..spec.features).map(|_| rng.normal()).collect();
            let n = norm(&u);
            if n == 0.0 {
                continue;
            }
            u.iter_mut().for_each(|x| *x /= n);
            if directions.iter().all(|v| dot(v, &u) < MAX_DIRECTION_DOT) {
                directions.push(u);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Generation(format!(
                "could not place a direction for class {c} in {} dimensions after {DIRECTION_RETRIES} retries",
                spec.features
            )));
        }
    }

    let total: usize = spec.per_class_counts.iter().sum();
    let mut data = Vec::with_capacity(total * spec.features);
    let mut labels = Vec::with_capacity(total);
    for (c, (&count, u)) in spec.per_class_counts.iter().zip(&directions).enumerate() {
        for _ in 0..count {
            data.extend(u.iter().map(|&m| spec.separation * m + spec.noise * rng.normal()));
            labels.push(c);
        }
    }
    Dataset::new(
        Matrix::from_vec(total, spec.features, data)?,
        labels,
        spec.classes,
    )
}

/// Canonical float formatting: 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes to the feature-file format: header `C F`, then one
/// `label f_1 … f_F` line per sample.
pub fn format_features(ds: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", ds.num_classes, ds.num_features());
    for (row, &y) in ds.features.row_iter().zip(&ds.labels) {
        let _ = write!(out, "{y}");
        for &x in row {
            let _ = write!(out, " {}", fmt_f64(x));
        }
        out.push('\n');
    }
    out
}

pub fn write_features(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(format_features(ds).as_bytes())?;
    Ok(())
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_features(&std::fs::read_to_string(path)?)
}

pub fn parse_features(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_count = |s: &str, what: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("bad {what} {s:?} in header"),
        })
    };
    if fields.len() != 2 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header must be \"C F\", got {header:?}"),
        });
    }
    let classes = parse_count(fields[0], "class count")?;
    let features = parse_count(fields[1], "feature count")?;
    if classes < 2 || features == 0 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("need C >= 2 and F >= 1, got C={classes} F={features}"),
        });
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_s = parts.next().unwrap_or_default();
        let label: usize = label_s.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad label {label_s:?}"),
        })?;
        if label >= classes {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("label {label} out of range for {classes} classes"),
            });
        }
        let before = data.len();
        for p in parts {
            let v: f64 = p.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad feature value {p:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("non-finite feature value {p:?}"),
                });
            }
            data.push(v);
        }
        if data.len() - before != features {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {features} features, got {}", data.len() - before),
            });
        }
        labels.push(label);
    }
    let n = labels.len();
    Dataset::new(Matrix::from_vec(n, features, data)?, labels, classes).map_err(|e| Error::Parse {
        line: n + 1,
        msg: e.to_string(),
    })
}

/// Stratified held-out split: from each class with at least two samples,
/// `round(fraction · N^c)` samples (clamped to `[1, N^c - 1]`) go to the
/// second dataset.
pub fn stratified_split(rng: &mut Rng, ds: &Dataset, fraction: f64) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "split fraction must be in (0, 1), got {fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut held = Vec::new();
    for mut idx in ds.class_indices() {
        rng.shuffle(&mut idx);
        let n = idx.len();
        let take = if n < 2 {
            0
        } else {
            ((fraction * n as f64).round() as usize).clamp(1, n - 1)
        };
        held.extend_from_slice(&idx[..take]);
        train.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    held.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&held)))
}

/// Assignment of sample indices to clients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    /// Ascending sample indices held by each client.
    pub client_indices: Vec<Vec<usize>>,
    /// `counts[k][c]` = samples of class `c` on client `k`.
    pub counts: Vec<Vec<usize>>,
}

impl PartitionSpec {
    pub fn num_clients(&self) -> usize {
        self.client_indices.len()
    }

    /// `N_k` for every client.
    pub fn client_sizes(&self) -> Vec<usize> {
        self.client_indices.iter().map(Vec::len).collect()
    }

    /// Aggregation weights `N_k / Σ N_k`.
    pub fn weights(&self) -> Vec<f64> {
        let sizes = self.client_sizes();
        let total: usize = sizes.iter().sum();
        sizes.iter().map(|&n| n as f64 / total as f64).collect()
    }

    /// Per client, the fraction of its samples in its largest class.
    pub fn skew(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|row| {
                let total: usize = row.iter().sum();
                let max = row.iter().copied().max().unwrap_or(0);
                if total == 0 {
                    0.0
                } else {
                    max as f64 / total as f64
                }
            })
            .collect()
    }

    pub fn mean_skew(&self) -> f64 {
        let s = self.skew();
        s.iter().sum::<f64>() / s.len() as f64
    }

    /// Checks disjointness, completeness over `0..n` and count consistency.
    pub fn verify(&self, ds: &Dataset) -> Result<()> {
        let mut seen = vec![false; ds.len()];
        for (k, idx) in self.client_indices.iter().enumerate() {
            let mut counts = vec![0; ds.num_classes];
            for &i in idx {
                if i >= ds.len() || seen[i] {
                    return Err(Error::InvalidInput(format!(
                        "sample {i} duplicated or out of range on client {k}"
                    )));
                }
                seen[i] = true;
                counts[ds.labels[i]] += 1;
            }
            if counts != self.counts[k] {
                return Err(Error::InvalidInput(format!(
                    "count row of client {k} disagrees with its indices"
                )));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("sample {i} unassigned")));
        }
        Ok(())
    }
}

pub const MAX_PARTITION_ATTEMPTS: usize = 1000;

/// Splits `n` items by proportions `p` with largest-remainder rounding; ties
/// on the remainder go to the lower index.
pub fn largest_remainder(p: &[f64], n: usize) -> Vec<usize> {
    let quotas: Vec<f64> = p.iter().map(|&x| x * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Dirichlet label-skew partition: for each class independently draw
/// `Dir_k(alpha)` over clients and split that class's shuffled indices by
/// those proportions. The whole partition is redrawn until every client
/// holds at least `min_samples` samples.
pub fn partition(
    rng: &mut Rng,
    ds: &Dataset,
    k: usize,
    alpha: f64,
    min_samples: usize,
) -> Result<PartitionSpec> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need >= 2 clients, got {k}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let by_class = ds.class_indices();
    for _ in 0..MAX_PARTITION_ATTEMPTS {
        let mut client_indices = vec![Vec::new(); k];
        let mut counts = vec![vec![0; ds.num_classes]; k];
        for (c, idx) in by_class.iter().enumerate() {
            let mut idx = idx.clone();
            rng.shuffle(&mut idx);
            let p = dirichlet(rng, alpha, k)?;
            let split = largest_remainder(&p, idx.len());
            let mut start = 0;
            for (client, &n) in split.iter().enumerate() {
                client_indices[client].extend_from_slice(&idx[start..start + n]);
                counts[client][c] = n;
                start += n;
            }
        }
        if client_indices.iter().all(|v| v.len() >= min_samples) {
            client_indices.iter_mut().for_each(|v| v.sort_unstable());
            return Ok(PartitionSpec {
                client_indices,
                counts,
            });
        }
    }
    Err(Error::PartitionInfeasible {
        attempts: MAX_PARTITION_ATTEMPTS,
        min_samples,
    })
}
