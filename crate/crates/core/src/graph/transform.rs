use super::UserGraph;
use crate::error::{Error, Result};
use crate::linalg::{inv_sqrt, SymMatrix};

/// `A = I + L` and `A^{-1/2}` for a user graph.
///
/// The Kronecker-lifted operator `A⊗^{-1/2} = A^{-1/2} ⊗ I_d` is never
/// formed. Lifting a context `x` observed at node `i` uses
/// `(A^{-1/2} ⊗ I_d)(e_i ⊗ x) = (A^{-1/2} e_i) ⊗ x`, an `O(nd)` operation.
///
/// `A^{-1/2}` is computed per connected component, so entries linking
/// different components are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SharingTransform {
    a: SymMatrix,
    a_inv_sqrt: SymMatrix,
}

impl SharingTransform {
    pub fn build(g: &UserGraph) -> Result<Self> {
        let n = g.n();
        let mut a = g.laplacian();
        for i in 0..n {
            let v = a.get(i, i) + 1.0;
            a.set(i, i, v);
        }
        let mut a_inv_sqrt = SymMatrix::zeros(n);
        for comp in g.components() {
            if comp.len() == 1 {
                let i = comp[0];
                a_inv_sqrt.set(i, i, 1.0 / a.get(i, i).sqrt());
                continue;
            }
            let sub = SymMatrix::from_upper(comp.len(), |p, q| a.get(comp[p], comp[q]));
            let r = inv_sqrt(&sub)?;
            for (p, &i) in comp.iter().enumerate() {
                for (q, &j) in comp.iter().enumerate().skip(p) {
                    a_inv_sqrt.set(i, j, r.get(p, q));
                }
            }
        }
        Ok(Self { a, a_inv_sqrt })
    }

    /// Wraps precomputed matrices. Used to inject faults in verification runs.
    pub fn from_parts(a: SymMatrix, a_inv_sqrt: SymMatrix) -> Result<Self> {
        if a.order() != a_inv_sqrt.order() {
            return Err(Error::DimensionMismatch { expected: a.order(), actual: a_inv_sqrt.order() });
        }
        Ok(Self { a, a_inv_sqrt })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.order()
    }

    /// `I + L`.
    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    /// `(I + L)^{-1/2}`.
    pub fn a_inv_sqrt(&self) -> &SymMatrix {
        &self.a_inv_sqrt
    }

    /// Column `i` of `A^{-1/2}`; the per-block scale of a context lifted
    /// from node `i`.
    pub fn spread(&self, i: usize) -> Result<&[f64]> {
        if i >= self.n() {
            return Err(Error::OutOfRange { what: "nodes", index: i, len: self.n() });
        }
        // Symmetric, so row i equals column i.
        Ok(self.a_inv_sqrt.row(i))
    }

    /// `A⊗^{-1/2} φ_i(x)`: block `j` (of length `d`) is `A^{-1/2}[j][i] · x`.
    pub fn lift(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        let spread = self.spread(i)?;
        let d = x.len();
        let mut out = vec![0.0; d * self.n()];
        for (j, &s) in spread.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for (o, xi) in out[j * d..(j + 1) * d].iter_mut().zip(x) {
                *o = s * xi;
            }
        }
        Ok(out)
    }
}

/// `φ_i(x)`: zeros except block `i`, which holds `x`.
pub fn compound(n: usize, i: usize, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut out = vec![0.0; n * d];
    out[i * d..(i + 1) * d].copy_from_slice(x);
    out
}
