//! Symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! algorithm with Wilkinson-style shifts (the classic `tred2`/`tql2` pair).
//! Iterates until every off-diagonal element of the tridiagonal form is below
//! machine epsilon relative to the matrix norm, which is stricter than a
//! `1e-12` off-diagonal Frobenius criterion.

use super::{dot, Matrix, SymMatrix};
use crate::error::{Error, Result};

/// Smallest eigenvalue accepted by [`inv_sqrt`].
pub const PD_FLOOR: f64 = 1e-12;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Row `k` holds the unit eigenvector for `values[k]`.
    vectors: Matrix,
}

impl SymEigen {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        self.vectors.row(k)
    }

    /// The usual `V` with eigenvectors as columns, so that `m = V diag(λ) Vᵀ`.
    pub fn vectors_as_columns(&self) -> Matrix {
        self.vectors.transpose()
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        sym_from_spectrum(self, |l| l)
    }
}

/// Eigendecomposition of a symmetric matrix.
pub fn eigh(m: &SymMatrix) -> Result<SymEigen> {
    let n = m.order();
    if n == 0 {
        return Ok(SymEigen { values: vec![], vectors: Matrix::zeros(0, 0) });
    }
    let mut v = m.as_matrix().clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    // tql2 rotates columns of V; work on the transpose so rotations touch rows.
    let mut vt = v.transpose();
    tql2(&mut vt, &mut d, &mut e)?;
    Ok(SymEigen { values: d, vectors: vt })
}

/// `f(m)` for a scalar function applied to the spectrum.
pub fn sym_apply(m: &SymMatrix, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    let eig = eigh(m)?;
    Ok(sym_from_spectrum(&eig, f))
}

/// `m^{-1/2}` for a symmetric positive definite `m`.
pub fn inv_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = eigh(m)?;
    if let Some(&low) = eig.values.iter().find(|&&l| l <= PD_FLOOR) {
        return Err(Error::NotPositiveDefinite(low));
    }
    Ok(sym_from_spectrum(&eig, |l| 1.0 / l.sqrt()))
}

fn sym_from_spectrum(eig: &SymEigen, f: impl Fn(f64) -> f64) -> SymMatrix {
    let n = eig.order();
    // Column i of `scaled` is (f(λ_k) v_k[i])_k and `plain` likewise without f,
    // so entry (i, j) is a single dot product over contiguous memory.
    let mut scaled = Matrix::zeros(n, n);
    let mut plain = Matrix::zeros(n, n);
    for k in 0..n {
        let fk = f(eig.values[k]);
        let vk = eig.vector(k);
        for i in 0..n {
            scaled.set(i, k, fk * vk[i]);
            plain.set(i, k, vk[i]);
        }
    }
    SymMatrix::from_upper(n, |i, j| dot(scaled.row(i), plain.row(j)))
}

fn tred2(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v.get(n - 1, j);
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
                v.set(j, i, 0.0);
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v.set(j, i, f);
                g = e[j] + v.get(j, j) * f;
                for k in j + 1..i {
                    g += v.get(k, j) * d[k];
                    e[k] += v.get(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let val = v.get(k, j) - (f * e[k] + g * d[k]);
                    v.set(k, j, val);
                }
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        let vii = v.get(i, i);
        v.set(n - 1, i, vii);
        v.set(i, i, 1.0);
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v.get(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v.get(k, i + 1) * v.get(k, j);
                }
                for k in 0..=i {
                    let val = v.get(k, j) - g * d[k];
                    v.set(k, j, val);
                }
            }
        }
        for k in 0..=i {
            v.set(k, i + 1, 0.0);
        }
    }
    for j in 0..n {
        d[j] = v.get(n - 1, j);
        v.set(n - 1, j, 0.0);
    }
    v.set(n - 1, n - 1, 1.0);
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`; `vt` holds eigenvectors as rows.
fn tql2(vt: &mut Matrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let max_iter = 60 * n.max(1);
    let mut iterations = 0usize;
    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                iterations += 1;
                if iterations > max_iter {
                    return Err(Error::invalid("symmetric eigensolver failed to converge"));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate_rows(vt, i, s, c);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            let cols = vt.cols();
            let data = vt.as_mut_slice();
            for c in 0..cols {
                data.swap(i * cols + c, k * cols + c);
            }
        }
    }
    Ok(())
}

#[inline]
fn rotate_rows(vt: &mut Matrix, i: usize, s: f64, c: f64) {
    let cols = vt.cols();
    let (lo, hi) = vt.as_mut_slice().split_at_mut((i + 1) * cols);
    let row_i = &mut lo[i * cols..];
    let row_next = &mut hi[..cols];
    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}
