use super::state::{argmax, check_payoff, BanditState, ConfidencePolicy};
use crate::error::{Error, Result};
use crate::graph::{SharingTransform, UserGraph};
use crate::linalg::{axpy, dot};

/// How the `dn`-dimensional GOB.Lin state is split into independent blocks.
///
/// `M⁻¹` stays block-diagonal across any set of nodes that `A^{-1/2}` never
/// couples, so storing one state per block is exact.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Grouping {
    /// One block per connected component.
    #[default]
    Components,
    /// A single dense `dn × dn` state.
    Dense,
    /// Caller-supplied blocks; each must be a union of components.
    Custom(Vec<Vec<usize>>),
}

#[derive(Debug, Clone)]
struct Group {
    nodes: Vec<usize>,
    state: BanditState,
}

/// Per-round products shared by scoring and the update:
/// `Y = M⁻¹ (a ⊗ I_d)` (`D × d`) and `Q = (aᵀ ⊗ I_d) Y` (`d × d`),
/// where `a` is the served node's column of `A^{-1/2}` restricted to its block.
#[derive(Debug, Clone)]
struct Pending {
    user: usize,
    y: Vec<f64>,
    q: Vec<f64>,
}

/// GOB.Lin: one linear bandit over the lifted vectors `(A^{-1/2} e_i) ⊗ x`.
///
/// A candidate's quadratic form `φ̃ᵀ M⁻¹ φ̃` equals `xᵀ Q x`, so scoring `c`
/// candidates costs `O(D²) + O(c d²)` rather than `O(c D²)`.
#[derive(Debug, Clone)]
pub struct GobLin {
    d: usize,
    transform: SharingTransform,
    groups: Vec<Group>,
    /// node → (group, position inside the group)
    locate: Vec<(usize, usize)>,
    /// node → its spread column restricted to its group, in group order
    spreads: Vec<Vec<f64>>,
    pending: Option<Pending>,
}

impl GobLin {
    pub fn new(g: &UserGraph, d: usize, grouping: Grouping) -> Result<Self> {
        let transform = SharingTransform::build(g)?;
        let blocks = match grouping {
            Grouping::Components => g.components(),
            Grouping::Dense => vec![(0..g.n()).collect()],
            Grouping::Custom(blocks) => blocks,
        };
        Self::with_transform(transform, d, blocks)
    }

    /// Builds the engine over an arbitrary transform. Blocks must partition
    /// the nodes and must not be coupled by the transform.
    pub fn with_transform(transform: SharingTransform, d: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("context dimension must be positive"));
        }
        let n = transform.n();
        let mut locate = vec![(usize::MAX, 0); n];
        for (gi, block) in blocks.iter().enumerate() {
            for (pos, &node) in block.iter().enumerate() {
                let slot = locate.get_mut(node).ok_or(Error::OutOfRange { what: "nodes", index: node, len: n })?;
                if slot.0 != usize::MAX {
                    return Err(Error::invalid(format!("node {node} appears in two blocks")));
                }
                *slot = (gi, pos);
            }
        }
        if let Some(missing) = locate.iter().position(|l| l.0 == usize::MAX) {
            return Err(Error::invalid(format!("node {missing} belongs to no block")));
        }
        let r = transform.a_inv_sqrt();
        for i in 0..n {
            for j in i + 1..n {
                if locate[i].0 != locate[j].0 && r.get(i, j) != 0.0 {
                    return Err(Error::invalid(format!("nodes {i} and {j} are coupled but stored in different blocks")));
                }
            }
        }
        let spreads = (0..n).map(|i| blocks[locate[i].0].iter().map(|&j| r.get(j, i)).collect()).collect();
        let groups =
            blocks.into_iter().map(|nodes| Group { state: BanditState::new(nodes.len() * d), nodes }).collect();
        Ok(Self { d, transform, groups, locate, spreads, pending: None })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.locate.len()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn transform(&self) -> &SharingTransform {
        &self.transform
    }

    pub fn block_count(&self) -> usize {
        self.groups.len()
    }

    /// Nodes of block `k`, in storage order.
    pub fn block_nodes(&self, k: usize) -> &[usize] {
        &self.groups[k].nodes
    }

    pub fn block_state(&self, k: usize) -> &BanditState {
        &self.groups[k].state
    }

    /// `ln|M|` of the full `dn`-dimensional state.
    pub fn logdet(&self) -> f64 {
        self.groups.iter().map(|g| g.state.logdet()).sum()
    }

    /// `tr(M)` of the full state.
    pub fn trace(&self) -> f64 {
        self.groups.iter().map(|g| g.state.trace()).sum()
    }

    fn check_user(&self, user: usize) -> Result<()> {
        if user >= self.n() {
            return Err(Error::OutOfRange { what: "users", index: user, len: self.n() });
        }
        Ok(())
    }

    fn check_context(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: x.len() });
        }
        Ok(())
    }

    fn products(&self, user: usize) -> Pending {
        let d = self.d;
        let (gi, _) = self.locate[user];
        let a = &self.spreads[user];
        let state = &self.groups[gi].state;
        let dim = state.dim();
        // Only the upper triangle of M⁻¹ is stored. Row r contributes
        // directly to Y[r] (columns c ≥ r) and, through symmetry, to
        // Y[c][r mod d] for c > r; the latter is gathered in a transposed
        // buffer so both passes are contiguous.
        let mut y = vec![0.0; dim * d];
        let mut yt = vec![0.0; d * dim];
        for r in 0..dim {
            let row = state.inverse().upper_row(r);
            let yr = &mut y[r * d..(r + 1) * d];
            for (l, &al) in a.iter().enumerate().skip(r / d) {
                if al != 0.0 {
                    let from = (l * d).max(r);
                    axpy(al, &row[from - r..(l + 1) * d - r], &mut yr[from - l * d..]);
                }
            }
            let ar = a[r / d];
            if ar != 0.0 {
                let s = r % d;
                axpy(ar, &row[1..], &mut yt[s * dim + r + 1..(s + 1) * dim]);
            }
        }
        for (c, yc) in y.chunks_exact_mut(d).enumerate() {
            for (s, v) in yc.iter_mut().enumerate() {
                *v += yt[s * dim + c];
            }
        }
        let mut q = vec![0.0; d * d];
        for (l, &al) in a.iter().enumerate() {
            if al != 0.0 {
                axpy(al, &y[l * d * d..(l + 1) * d * d], &mut q);
            }
        }
        Pending { user, y, q }
    }

    fn quad(q: &[f64], x: &[f64]) -> f64 {
        let qx: Vec<f64> = q.chunks_exact(x.len()).map(|row| dot(row, x)).collect();
        dot(x, &qx)
    }

    /// `(A^{-1/2} e_user ⊗ I)ᵀ w`, the effective weight vector for `user`.
    pub fn user_weights(&self, user: usize) -> Result<Vec<f64>> {
        self.check_user(user)?;
        let d = self.d;
        let (gi, _) = self.locate[user];
        let w = self.groups[gi].state.weights();
        let mut out = vec![0.0; d];
        for (l, &al) in self.spreads[user].iter().enumerate() {
            if al != 0.0 {
                axpy(al, &w[l * d..(l + 1) * d], &mut out);
            }
        }
        Ok(out)
    }

    /// Scores every candidate for `user` at round `t`.
    pub fn scores(&mut self, policy: &ConfidencePolicy, user: usize, candidates: &[Vec<f64>], t: u64) -> Result<Vec<f64>> {
        self.check_user(user)?;
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        for x in candidates {
            self.check_context(x)?;
        }
        let wa = self.user_weights(user)?;
        let logdet = self.logdet();
        let p = self.products(user);
        let scores = candidates.iter().map(|x| dot(&wa, x) + policy.bonus(Self::quad(&p.q, x), t, logdet)).collect();
        self.pending = Some(p);
        Ok(scores)
    }

    pub fn select(&mut self, policy: &ConfidencePolicy, user: usize, candidates: &[Vec<f64>], t: u64) -> Result<usize> {
        argmax(self.scores(policy, user, candidates, t)?)
    }

    /// Feeds back payoff `a` for context `x` served to `user`.
    pub fn update(&mut self, user: usize, x: &[f64], a: f64) -> Result<()> {
        self.check_user(user)?;
        self.check_context(x)?;
        check_payoff(a)?;
        let p = match self.pending.take() {
            Some(p) if p.user == user => p,
            _ => self.products(user),
        };
        let d = self.d;
        let spread = &self.spreads[user];
        let mut v = vec![0.0; spread.len() * d];
        for (l, &al) in spread.iter().enumerate() {
            if al != 0.0 {
                for (o, xi) in v[l * d..(l + 1) * d].iter_mut().zip(x) {
                    *o = al * xi;
                }
            }
        }
        let mv: Vec<f64> = p.y.chunks_exact(d).map(|row| dot(row, x)).collect();
        let (gi, _) = self.locate[user];
        self.groups[gi].state.update_with(&v, &mv, a)
    }

    /// The full lifted vector `A⊗^{-1/2} φ_user(x)` of length `dn`.
    pub fn lift(&self, user: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_context(x)?;
        self.transform.lift(user, x)
    }

    /// Dense `dn × dn` `M⁻¹`, assembled from the blocks. Test and debug aid.
    pub fn dense_inverse(&self) -> Vec<f64> {
        let (d, dn) = (self.d, self.d * self.n());
        let mut out = vec![0.0; dn * dn];
        for g in &self.groups {
            let inv = g.state.inverse();
            for (p, &i) in g.nodes.iter().enumerate() {
                for (q, &j) in g.nodes.iter().enumerate() {
                    for s in 0..d {
                        for u in 0..d {
                            out[(i * d + s) * dn + j * d + u] = inv.get(p * d + s, q * d + u);
                        }
                    }
                }
            }
        }
        out
    }

    /// Dense `b` and `w` in global node order.
    pub fn dense_bias_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.d;
        let mut b = vec![0.0; d * self.n()];
        let mut w = vec![0.0; d * self.n()];
        for g in &self.groups {
            for (p, &i) in g.nodes.iter().enumerate() {
                b[i * d..(i + 1) * d].copy_from_slice(&g.state.bias()[p * d..(p + 1) * d]);
                w[i * d..(i + 1) * d].copy_from_slice(&g.state.weights()[p * d..(p + 1) * d]);
            }
        }
        (b, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triangle_update_spreads_to_all_blocks() {
        let mut gob = GobLin::new(&UserGraph::complete(3), 2, Grouping::Components).unwrap();
        gob.update(0, &[1.0, 0.0], 1.0).unwrap();
        let (b, _) = gob.dense_bias_weights();
        assert_abs_diff_eq!(b[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b[2], 1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b[4], 1.0 / 6.0, epsilon = 1e-14);
        assert_eq!((b[1], b[3], b[5]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn fast_scores_match_lifted_generic_path() {
        let g = UserGraph::from_unweighted(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let policy = ConfidencePolicy::Theoretical { sigma: 0.3, delta: 0.1, norm_bound: 1.2 };
        let mut gob = GobLin::new(&g, 3, Grouping::Dense).unwrap();
        let mut generic = BanditState::new(15);
        let contexts = [vec![0.6, 0.0, 0.8], vec![0.0, 1.0, 0.0], vec![0.36, 0.48, 0.8], vec![-0.6, 0.8, 0.0]];
        for t in 1..=40u64 {
            let user = (t as usize * 7) % 5;
            let fast = gob.scores(&policy, user, &contexts, t).unwrap();
            for (x, s) in contexts.iter().zip(&fast) {
                let v = gob.lift(user, x).unwrap();
                assert_abs_diff_eq!(generic.score(&policy, &v, t).unwrap(), *s, epsilon = 1e-12);
            }
            let k = argmax(fast).unwrap();
            let a = ((t as f64) * 0.37).sin();
            gob.update(user, &contexts[k], a).unwrap();
            generic.update(&gob.lift(user, &contexts[k]).unwrap(), a).unwrap();
        }
        let dense = gob.dense_inverse();
        for (a, b) in dense.iter().zip(&generic.inverse().to_dense()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(gob.logdet(), generic.logdet(), epsilon = 1e-12);
    }

    #[test]
    fn component_and_dense_storage_agree() {
        let g = UserGraph::from_unweighted(6, [(0, 1), (1, 2), (4, 5)]).unwrap();
        let policy = ConfidencePolicy::simplified(0.7);
        let mut split = GobLin::new(&g, 2, Grouping::Components).unwrap();
        let mut dense = GobLin::new(&g, 2, Grouping::Dense).unwrap();
        assert_eq!(split.block_count(), 3);
        let cands = [vec![1.0, 0.0], vec![0.0, 1.0], vec![0.7071, 0.7071]];
        for t in 1..=60u64 {
            let user = (t as usize * 5) % 6;
            let a = split.select(&policy, user, &cands, t).unwrap();
            let b = dense.select(&policy, user, &cands, t).unwrap();
            assert_eq!(a, b);
            let payoff = if a == 1 { 0.5 } else { -0.2 };
            split.update(user, &cands[a], payoff).unwrap();
            dense.update(user, &cands[b], payoff).unwrap();
        }
        for (x, y) in split.dense_inverse().iter().zip(dense.dense_inverse()) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(split.logdet(), dense.logdet(), epsilon = 1e-10);
    }

    #[test]
    fn rejects_bad_blocks() {
        let g = UserGraph::from_unweighted(3, [(0, 1)]).unwrap();
        assert!(GobLin::new(&g, 2, Grouping::Custom(vec![vec![0], vec![1, 2]])).is_err());
        assert!(GobLin::new(&g, 2, Grouping::Custom(vec![vec![0, 1]])).is_err());
        assert!(GobLin::new(&g, 2, Grouping::Custom(vec![vec![0, 1], vec![1, 2]])).is_err());
        assert!(GobLin::new(&g, 2, Grouping::Custom(vec![vec![1, 0], vec![2]])).is_ok());
    }

    #[test]
    fn update_without_select_matches_update_after_select() {
        let g = UserGraph::complete(4);
        let policy = ConfidencePolicy::simplified(1.0);
        let mut a = GobLin::new(&g, 2, Grouping::Components).unwrap();
        let mut b = a.clone();
        let x = vec![0.6, -0.8];
        a.select(&policy, 2, &[x.clone()], 1).unwrap();
        a.update(2, &x, 0.4).unwrap();
        b.update(2, &x, 0.4).unwrap();
        assert_eq!(a.dense_inverse(), b.dense_inverse());
        // A stale selection for another user is not reused.
        a.select(&policy, 1, &[x.clone()], 2).unwrap();
        a.update(3, &x, 0.1).unwrap();
        b.update(3, &x, 0.1).unwrap();
        assert_eq!(a.dense_inverse(), b.dense_inverse());
    }
}
