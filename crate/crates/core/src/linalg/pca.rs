//! Principal component projection.
//!
//! Small problems go through an exact symmetric eigendecomposition of either
//! the covariance (`dim × dim`) or the centered Gram matrix (`rows × rows`),
//! whichever is smaller. Tag corpora with tens of thousands of rows and
//! columns use a randomized subspace iteration on the sparse rows with a
//! fixed internal seed, so the result is still a pure function of the input.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{axpy, dot, eigh, Matrix, SymMatrix};
use crate::error::{Error, Result};

/// Largest `min(rows, dim)` handled by the exact path.
const EXACT_LIMIT: usize = 1200;
const OVERSAMPLE: usize = 15;
const POWER_ITERS: usize = 7;
const PCA_SEED: u64 = 0x5eed_0f_9ca;

/// Sparse rows, `(column, value)` pairs sorted by column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRows {
    pub dim: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let rows = rows
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect())
            .collect();
        Self { dim, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in &self.rows {
            for &(j, v) in row {
                mean[j] += v;
            }
        }
        let n = self.rows.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    fn row_dot(row: &[(usize, f64)], dense: &[f64]) -> f64 {
        row.iter().map(|&(j, v)| v * dense[j]).sum()
    }

    /// Centered rows times a dense `dim`-vector.
    fn centered_times(&self, mean: &[f64], x: &[f64]) -> Vec<f64> {
        let shift = dot(mean, x);
        self.rows.iter().map(|r| Self::row_dot(r, x) - shift).collect()
    }

    /// Transposed centered rows times a dense `rows`-vector.
    fn centered_t_times(&self, mean: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (row, &yi) in self.rows.iter().zip(y) {
            for &(j, v) in row {
                out[j] += v * yi;
            }
        }
        let total: f64 = y.iter().sum();
        axpy(-total, mean, &mut out);
        out
    }

    fn dense_centered(&self, mean: &[f64]) -> Matrix {
        let mut m = Matrix::zeros(self.rows.len(), self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            let dst = m.row_mut(i);
            for (d, mu) in dst.iter_mut().zip(mean) {
                *d = -mu;
            }
            for &(j, v) in row {
                dst[j] += v;
            }
        }
        m
    }
}

/// Result of [`pca_fit_project`].
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `k` orthonormal principal directions, each of length `dim`, in
    /// decreasing order of explained variance.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component.
    pub variances: Vec<f64>,
    /// Centered rows expressed in the component basis.
    pub projected: Vec<Vec<f64>>,
    /// The `k` that was asked for. Larger than `components.len()` when the
    /// data had lower rank.
    pub requested: usize,
}

impl Pca {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn rank_reduced(&self) -> bool {
        self.components.len() < self.requested
    }

    /// Projects a new row with the fitted mean and basis.
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| row.iter().zip(&self.mean).zip(c).map(|((x, m), ci)| (x - m) * ci).sum())
            .collect()
    }

    /// Basis as a `dim × k` matrix with orthonormal columns.
    pub fn basis(&self) -> Matrix {
        let dim = self.mean.len();
        let mut m = Matrix::zeros(dim, self.k());
        for (j, c) in self.components.iter().enumerate() {
            for i in 0..dim {
                m.set(i, j, c[i]);
            }
        }
        m
    }
}

/// Fits the top-`k` principal directions of `rows` and projects them.
pub fn pca_fit_project(rows: &[Vec<f64>], k: usize) -> Result<Pca> {
    if rows.is_empty() {
        return Err(Error::invalid("PCA needs at least 2 rows, got 0"));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != rows[0].len()) {
        return Err(Error::DimensionMismatch { expected: rows[0].len(), actual: bad.len() });
    }
    pca_fit_project_sparse(&SparseRows::from_dense(rows), k)
}

pub fn pca_fit_project_sparse(data: &SparseRows, k: usize) -> Result<Pca> {
    let n = data.len();
    let dim = data.dim;
    if n < 2 {
        return Err(Error::invalid(format!("PCA needs at least 2 rows, got {n}")));
    }
    if k == 0 || k > n.min(dim) {
        return Err(Error::invalid(format!("PCA dimension {k} not in 1..={}", n.min(dim))));
    }
    let mean = data.mean();
    let (mut components, variances) = if n.min(dim) <= EXACT_LIMIT {
        exact_components(data, &mean, k)?
    } else {
        randomized_components(data, &mean, k)?
    };
    for c in &mut components {
        orient(c);
    }
    let projected = data
        .rows
        .iter()
        .map(|r| {
            components
                .iter()
                .map(|c| SparseRows::row_dot(r, c) - dot(&mean, c))
                .collect()
        })
        .collect();
    Ok(Pca { mean, components, variances, projected, requested: k })
}

/// Flips a direction so its largest-magnitude entry is positive.
fn orient(c: &mut [f64]) {
    let pivot = c.iter().copied().fold(0.0_f64, |best, v| if v.abs() > best.abs() { v } else { best });
    if pivot < 0.0 {
        c.iter_mut().for_each(|v| *v = -*v);
    }
}

fn keep_rank(values: &[f64], k: usize) -> usize {
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    values.iter().take(k).take_while(|&&v| v > 1e-12 * top.max(f64::MIN_POSITIVE)).count()
}

fn exact_components(data: &SparseRows, mean: &[f64], k: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = data.len();
    let dim = data.dim;
    let denom = (n - 1) as f64;
    let x = data.dense_centered(mean);
    if dim <= n {
        let xt = x.transpose();
        let cov = SymMatrix::from_upper(dim, |i, j| dot(xt.row(i), xt.row(j)) / denom);
        let eig = eigh(&cov)?;
        let order: Vec<usize> = (0..dim).rev().collect();
        let values: Vec<f64> = order.iter().map(|&i| eig.values[i]).collect();
        let r = keep_rank(&values, k);
        let comps = order.iter().take(r).map(|&i| eig.vector(i).to_vec()).collect();
        Ok((comps, values[..r].to_vec()))
    } else {
        // Gram route: X Xᵀ w = σ² w gives the right singular vector Xᵀ w / σ.
        let gram = SymMatrix::from_upper(n, |i, j| dot(x.row(i), x.row(j)));
        let eig = eigh(&gram)?;
        let order: Vec<usize> = (0..n).rev().collect();
        let sq: Vec<f64> = order.iter().map(|&i| eig.values[i]).collect();
        let r = keep_rank(&sq, k);
        let xt = x.transpose();
        let mut comps = Vec::with_capacity(r);
        for &i in order.iter().take(r) {
            let w = eig.vector(i);
            let mut c: Vec<f64> = (0..dim).map(|j| dot(xt.row(j), w)).collect();
            let s = dot(&c, &c).sqrt();
            c.iter_mut().for_each(|v| *v /= s);
            comps.push(c);
        }
        orthonormalize(&mut comps);
        Ok((comps, sq[..r].iter().map(|v| v / denom).collect()))
    }
}

fn randomized_components(
    data: &SparseRows,
    mean: &[f64],
    k: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = data.len();
    let dim = data.dim;
    let width = (k + OVERSAMPLE).min(n.min(dim));
    let mut rng = ChaCha8Rng::seed_from_u64(PCA_SEED);
    let mut basis: Vec<Vec<f64>> = (0..width)
        .map(|_| {
            let omega: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            data.centered_times(mean, &omega)
        })
        .collect();
    orthonormalize(&mut basis);
    for _ in 0..POWER_ITERS {
        let mut right: Vec<Vec<f64>> = basis.iter().map(|q| data.centered_t_times(mean, q)).collect();
        orthonormalize(&mut right);
        basis = right.iter().map(|z| data.centered_times(mean, z)).collect();
        orthonormalize(&mut basis);
    }
    // B = Qᵀ X, small SVD through B Bᵀ.
    let b: Vec<Vec<f64>> = basis.iter().map(|q| data.centered_t_times(mean, q)).collect();
    let l = b.len();
    let bbt = SymMatrix::from_upper(l, |i, j| dot(&b[i], &b[j]));
    let eig = eigh(&bbt)?;
    let order: Vec<usize> = (0..l).rev().collect();
    let sq: Vec<f64> = order.iter().map(|&i| eig.values[i]).collect();
    let r = keep_rank(&sq, k);
    let mut comps = Vec::with_capacity(r);
    for &i in order.iter().take(r) {
        let w = eig.vector(i);
        let mut c = vec![0.0; dim];
        for (bj, &wj) in b.iter().zip(w) {
            axpy(wj, bj, &mut c);
        }
        let s = dot(&c, &c).sqrt();
        c.iter_mut().for_each(|v| *v /= s);
        comps.push(c);
    }
    orthonormalize(&mut comps);
    let denom = (n - 1) as f64;
    Ok((comps, sq[..r].iter().map(|v| v / denom).collect()))
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns that
/// collapse to zero are dropped.
fn orthonormalize(cols: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut c in cols.drain(..) {
        let start = dot(&c, &c).sqrt();
        for _ in 0..2 {
            for q in &out {
                let p = dot(q, &c);
                axpy(-p, q, &mut c);
            }
        }
        let s = dot(&c, &c).sqrt();
        if s > 1e-10 * start.max(f64::MIN_POSITIVE) && s > 0.0 {
            c.iter_mut().for_each(|v| *v /= s);
            out.push(c);
        }
    }
    *cols = out;
}
