use serde::{Deserialize, Serialize};

use super::{axpy, dot};
use crate::error::{Error, Result};

/// Inverse of `M = I + Σ v vᵀ`, kept current through rank-one updates.
///
/// Each update costs `O(dim²)`. The log-determinant is accumulated from the
/// matrix determinant lemma, `ln|M + v vᵀ| = ln|M| + ln(1 + vᵀ M⁻¹ v)`.
///
/// Only the upper triangle is stored and updated, so the inverse is exactly
/// symmetric at all times and each update touches half the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementalInverse {
    dim: usize,
    /// Row-major `dim × dim` buffer; entries below the diagonal stay zero.
    upper: Vec<f64>,
    logdet: f64,
    updates: u64,
}

impl IncrementalInverse {
    pub fn new(dim: usize) -> Self {
        let mut upper = vec![0.0; dim * dim];
        for i in 0..dim {
            upper[i * dim + i] = 1.0;
        }
        Self { dim, upper, logdet: 0.0, updates: 0 }
    }

    /// Rebuilds from a full row-major inverse, which must be exactly symmetric.
    pub(crate) fn from_parts(dim: usize, full: Vec<f64>, logdet: f64, updates: u64) -> Result<Self> {
        if full.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: full.len() });
        }
        let mut upper = full;
        for i in 0..dim {
            for j in 0..i {
                if upper[i * dim + j] != upper[j * dim + i] {
                    return Err(Error::NotSymmetric { i, j, gap: (upper[i * dim + j] - upper[j * dim + i]).abs() });
                }
                upper[i * dim + j] = 0.0;
            }
        }
        Ok(Self { dim, upper, logdet, updates })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ln|M|`.
    #[inline]
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    #[inline]
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Row `i` of `M⁻¹` from the diagonal onward: entries `(i, i..dim)`.
    #[inline]
    pub fn upper_row(&self, i: usize) -> &[f64] {
        &self.upper[i * self.dim + i..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.upper[i * self.dim + j]
    }

    /// Full row-major `M⁻¹`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = self.upper.clone();
        for i in 0..n {
            for j in 0..i {
                out[i * n + j] = self.upper[j * n + i];
            }
        }
        out
    }

    /// `M⁻¹ v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let n = self.dim;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = self.upper_row(i);
            out[i] += dot(row, &v[i..]);
            if v[i] != 0.0 {
                axpy(v[i], &row[1..], &mut out[i + 1..]);
            }
        }
        Ok(out)
    }

    /// `vᵀ M⁻¹ v`, clamped at zero.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        let mv = self.apply(v)?;
        Ok(dot(v, &mv).max(0.0))
    }

    /// `M ← M + v vᵀ`. Returns `M_prev⁻¹ v` and `vᵀ M_prev⁻¹ v`.
    pub fn rank_one_update(&mut self, v: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mv = self.apply(v)?;
        let q = self.rank_one_update_with(v, &mv)?;
        Ok((mv, q))
    }

    /// Same as [`rank_one_update`](Self::rank_one_update) with `M⁻¹ v`
    /// supplied by the caller (the graph engine gets it for free from its
    /// scoring pass).
    pub(crate) fn rank_one_update_with(&mut self, v: &[f64], mv: &[f64]) -> Result<f64> {
        self.check(v)?;
        self.check(mv)?;
        let q = dot(v, mv).max(0.0);
        if q == 0.0 {
            // v = 0 (M⁻¹ is positive definite): nothing changes.
            return Ok(0.0);
        }
        let denom = 1.0 + q;
        let n = self.dim;
        for i in 0..n {
            let ui = mv[i];
            if ui == 0.0 {
                continue;
            }
            let row = &mut self.upper[i * n + i..(i + 1) * n];
            axpy(-ui / denom, &mv[i..], row);
        }
        self.logdet += denom.ln();
        self.updates += 1;
        Ok(q)
    }

    /// `tr(M⁻¹)`.
    pub fn inv_trace(&self) -> f64 {
        (0..self.dim).map(|i| self.upper[i * self.dim + i]).sum()
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: v.len() });
        }
        Ok(())
    }
}
