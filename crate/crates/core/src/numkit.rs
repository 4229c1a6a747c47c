//! Deterministic numeric kernel: dense vectors and matrices, softmax,
//! cosine similarity and a seeded random source with Dirichlet sampling.
//!
//! Everything is `f64`. Random streams are derived from a single experiment
//! seed by *sub-seeding*: a child stream is a pure function of the parent
//! seed, a purpose label and an index, so the order in which streams are
//! created or consumed never changes what they produce.

use std::ops::{Deref, DerefMut};

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense vector of `f64`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics; a matrix with zero columns has no data.
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// `out = self · x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(Error::Shape(format!(
                "matvec: {}x{} matrix with vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(Vector(self.row_iter().map(|r| dot(r, x)).collect()))
    }

    /// `out = selfᵀ · y`.
    pub fn matvec_t(&self, y: &[f64]) -> Result<Vector> {
        if y.len() != self.rows {
            return Err(Error::Shape(format!(
                "transposed matvec: {}x{} matrix with vector of length {}",
                self.rows,
                self.cols,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in self.row_iter().zip(y) {
            axpy(yr, r, &mut out);
        }
        Ok(Vector(out))
    }

    /// `self += scale · (u ⊗ v)`.
    pub fn add_outer(&mut self, scale: f64, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (i, &ui) in u.iter().enumerate() {
            axpy(scale * ui, v, self.row_mut(i));
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha · x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Result<Vector> {
    if logits.is_empty() {
        return Err(Error::InvalidInput("softmax of empty vector".into()));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("softmax of non-finite logits".into()));
    }
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    Ok(Vector(out))
}

/// Softmax overwriting `v`; callers guarantee finite, nonempty input.
pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "cosine of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Seeded pseudo-random source.
///
/// Backed by ChaCha8, whose output stream is fixed across platforms and
/// crate versions.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for `(label, index)`; depends only on this
    /// stream's seed, never on how much of it has been consumed.
    pub fn child(&self, label: &str, index: u64) -> Rng {
        // FNV-1a over the label, then splitmix64 finalization mixing in
        // parent seed and index.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        let mixed = splitmix64(splitmix64(self.seed ^ h) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        Rng::new(mixed)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Natural log of a Gamma(shape, 1) variate.
    ///
    /// Marsaglia–Tsang squeeze for shape >= 1; for shape < 1 the boost
    /// `G(a) = G(a + 1) · U^(1/a)` is applied in log space so that tiny
    /// shapes do not underflow to zero.
    pub fn ln_gamma_variate(&mut self, shape: f64) -> f64 {
        if shape < 1.0 {
            let u = 1.0 - self.uniform(); // (0, 1]
            return self.ln_gamma_variate(shape + 1.0) + u.ln() / shape;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return (d * v).ln();
            }
        }
    }

    pub fn gamma(&mut self, shape: f64) -> f64 {
        self.ln_gamma_variate(shape).exp()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sample from a symmetric Dirichlet `Dir_k(alpha)` by normalizing `k`
/// independent Gamma(alpha, 1) draws.
pub fn dirichlet(rng: &mut Rng, alpha: f64, k: usize) -> Result<Vector> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dirichlet concentration must be positive, got {alpha}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("dirichlet needs k >= 1".into()));
    }
    let logs: Vec<f64> = (0..k).map(|_| rng.ln_gamma_variate(alpha)).collect();
    let mut out = logs;
    softmax_in_place(&mut out);
    Ok(Vector(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0; 4]).unwrap();
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));

        let p = softmax(&[2f64.ln(), 0.0]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);

        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-15);
        assert!(p[1] < 1e-300);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(matches!(
            softmax(&[0.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            softmax(&[f64::INFINITY]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::DegenerateVector)
        ));
    }

    #[test]
    fn dirichlet_examples() {
        let mut rng = Rng::new(1);
        assert_eq!(dirichlet(&mut rng, 0.3, 1).unwrap().0, vec![1.0]);

        let mut rng = Rng::new(7);
        for _ in 0..100 {
            let p = dirichlet(&mut rng, 1e6, 4).unwrap();
            // sd per entry is sqrt(0.25 * 0.75 / (4e6 + 1)) ~ 2.2e-4
            assert!(p.iter().all(|&x| (x - 0.25).abs() < 0.01));
        }

        let a = dirichlet(&mut Rng::new(42), 0.1, 3).unwrap();
        let b = dirichlet(&mut Rng::new(42), 0.1, 3).unwrap();
        assert_eq!(a, b);

        assert!(matches!(
            dirichlet(&mut rng, 0.0, 3),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            dirichlet(&mut rng, -1.0, 3),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn dirichlet_tiny_alpha_stays_normalized() {
        let mut rng = Rng::new(3);
        for _ in 0..200 {
            let p = dirichlet(&mut rng, 0.001, 10).unwrap();
            let s: f64 = p.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn gamma_moments() {
        // Gamma(a, 1) has mean a and variance a.
        for &a in &[0.1, 0.5, 1.0, 3.0, 10.0] {
            let mut rng = Rng::new(99);
            let n = 40_000;
            let xs: Vec<f64> = (0..n).map(|_| rng.gamma(a)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            let se = (a / n as f64).sqrt();
            assert!((mean - a).abs() < 5.0 * se, "a={a} mean={mean}");
            assert!((var - a).abs() < 0.1 * a.max(0.5), "a={a} var={var}");
        }
    }

    #[test]
    fn child_streams_are_stable_and_distinct() {
        let root = Rng::new(5);
        let mut consumed = root.clone();
        consumed.uniform();
        let a = root.child("client", 0).uniform();
        assert_eq!(a, consumed.child("client", 0).uniform());
        assert_ne!(a, root.child("client", 1).uniform());
        assert_ne!(a, root.child("partition", 0).uniform());
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut rng = Rng::new(11);
        let mut v: Vec<usize> = (0..50).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }

    #[test]
    fn matvec_and_transpose() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.matvec(&[1.0, 0.0, -1.0]).unwrap().0, vec![-2.0, -2.0]);
        assert_eq!(m.matvec_t(&[1.0, 1.0]).unwrap().0, vec![5.0, 7.0, 9.0]);
        assert!(matches!(m.matvec(&[1.0]), Err(Error::Shape(_))));
        assert!(Matrix::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;
        use crate::numkit::Rng;

        proptest! {
            #[test]
            fn softmax_sums_to_one_and_shift_invariant(
                logits in prop::collection::vec(-50.0f64..50.0, 1..12),
                shift in -100.0f64..100.0,
            ) {
                let p = softmax(&logits).unwrap();
                let s: f64 = p.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
                let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
                let q = softmax(&shifted).unwrap();
                for (a, b) in p.iter().zip(q.iter()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }

            #[test]
            fn cosine_scale_invariant(
                a in prop::collection::vec(-10.0f64..10.0, 3),
                b in prop::collection::vec(-10.0f64..10.0, 3),
                scale in 1e-3f64..1e3,
            ) {
                prop_assume!(norm(&a) > 1e-6 && norm(&b) > 1e-6);
                let scaled: Vec<f64> = a.iter().map(|x| x * scale).collect();
                let c1 = cosine(&a, &b).unwrap();
                let c2 = cosine(&scaled, &b).unwrap();
                prop_assert!((c1 - c2).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&c1));
            }

            #[test]
            fn dirichlet_is_probability_vector(
                seed in any::<u64>(),
                alpha_idx in 0usize..6,
                k in 1usize..30,
            ) {
                let alpha = [0.01, 0.05, 0.1, 0.5, 1.0, 100.0][alpha_idx];
                let p = dirichlet(&mut Rng::new(seed), alpha, k).unwrap();
                prop_assert_eq!(p.len(), k);
                prop_assert!(p.iter().all(|&x| x >= 0.0 && x.is_finite()));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn rng_reproducible(seed in any::<u64>()) {
                let mut a = Rng::new(seed);
                let mut b = Rng::new(seed);
                for _ in 0..8 {
                    prop_assert_eq!(a.normal().to_bits(), b.normal().to_bits());
                    prop_assert_eq!(a.ln_gamma_variate(0.05).to_bits(), b.ln_gamma_variate(0.05).to_bits());
                }
            }
        }
    }
}
