use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, IncrementalInverse};

/// Refresh `w = M⁻¹ b` from scratch after this many incremental updates.
const WEIGHT_REFRESH_EVERY: u64 = 512;

/// How the exploration bonus is computed from `q = vᵀ M⁻¹ v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfidencePolicy {
    /// `α √(q · ln(t + 1))`.
    Simplified { alpha: f64 },
    /// `√q · (σ √(ln|M| + ln(1 + q) − ln δ) + norm_bound)`, where `ln|M|` is
    /// the determinant before the update and `ln(1 + q)` is the increment the
    /// candidate itself would add.
    Theoretical { sigma: f64, delta: f64, norm_bound: f64 },
}

impl ConfidencePolicy {
    pub fn simplified(alpha: f64) -> Self {
        Self::Simplified { alpha }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Simplified { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::invalid(format!("alpha must be positive and finite, got {alpha}")))
            }
            Self::Theoretical { sigma, delta, norm_bound } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
                }
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
                }
                if !(norm_bound >= 0.0 && norm_bound.is_finite()) {
                    return Err(Error::invalid(format!("norm bound must be >= 0, got {norm_bound}")));
                }
                Ok(())
            }
            Self::Simplified { .. } => Ok(()),
        }
    }

    /// Bonus for a candidate with quadratic form `q` at round `t` (1-based),
    /// given the current `ln|M|`.
    #[inline]
    pub fn bonus(&self, q: f64, t: u64, logdet: f64) -> f64 {
        let q = q.max(0.0);
        match *self {
            Self::Simplified { alpha } => alpha * (q * ((t + 1) as f64).ln()).sqrt(),
            Self::Theoretical { sigma, delta, norm_bound } => {
                let radius = (logdet + q.ln_1p() - delta.ln()).max(0.0).sqrt();
                q.sqrt() * (sigma * radius + norm_bound)
            }
        }
    }
}

/// Lowest index attaining the maximum score.
pub(crate) fn argmax(scores: impl IntoIterator<Item = f64>) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in scores.into_iter().enumerate() {
        if s.is_nan() {
            return Err(Error::invalid(format!("candidate {k} scored NaN")));
        }
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((k, s));
        }
    }
    best.map(|(k, _)| k).ok_or(Error::EmptyCandidates)
}

pub(crate) fn check_payoff(a: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::PayoffOutOfRange(a))
    }
}

/// Linear bandit state: `M⁻¹`, `b` and the cached `w = M⁻¹ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditState {
    inverse: IncrementalInverse,
    bias: Vec<f64>,
    weights: Vec<f64>,
    /// `tr(M) = dim + Σ ‖v‖²`.
    trace: f64,
}

impl BanditState {
    pub fn new(dim: usize) -> Self {
        Self { inverse: IncrementalInverse::new(dim), bias: vec![0.0; dim], weights: vec![0.0; dim], trace: dim as f64 }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    pub fn inverse(&self) -> &IncrementalInverse {
        &self.inverse
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn logdet(&self) -> f64 {
        self.inverse.logdet()
    }

    #[inline]
    pub fn updates(&self) -> u64 {
        self.inverse.updates()
    }

    /// `tr(M)`.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// `wᵀ v`.
    pub fn estimate(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        Ok(dot(&self.weights, v))
    }

    pub fn cb(&self, policy: &ConfidencePolicy, v: &[f64], t: u64) -> Result<f64> {
        let q = self.inverse.quad_form(v)?;
        Ok(policy.bonus(q, t, self.logdet()))
    }

    pub fn score(&self, policy: &ConfidencePolicy, v: &[f64], t: u64) -> Result<f64> {
        Ok(self.estimate(v)? + self.cb(policy, v, t)?)
    }

    /// Index of the candidate maximizing `wᵀv + cb(v)`; ties go to the lowest index.
    pub fn select(&self, policy: &ConfidencePolicy, candidates: &[Vec<f64>], t: u64) -> Result<usize> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let scores = candidates.iter().map(|v| self.score(policy, v, t)).collect::<Result<Vec<_>>>()?;
        argmax(scores)
    }

    /// `M ← M + v vᵀ`, `b ← b + a v`, `w ← M⁻¹ b`.
    pub fn update(&mut self, v: &[f64], a: f64) -> Result<()> {
        check_payoff(a)?;
        let mv = self.inverse.apply(v)?;
        self.update_with(v, &mv, a)
    }

    /// `update` with `M⁻¹ v` already known.
    pub(crate) fn update_with(&mut self, v: &[f64], mv: &[f64], a: f64) -> Result<()> {
        check_payoff(a)?;
        let residual = a - dot(v, &self.weights);
        let q = self.inverse.rank_one_update_with(v, mv)?;
        if q == 0.0 {
            return Ok(());
        }
        axpy(a, v, &mut self.bias);
        self.trace += dot(v, v);
        if self.inverse.updates() % WEIGHT_REFRESH_EVERY == 0 {
            self.refresh_weights();
        } else {
            // Sherman–Morrison applied to w = M⁻¹ b.
            axpy(residual / (1.0 + q), mv, &mut self.weights);
        }
        Ok(())
    }

    fn refresh_weights(&mut self) {
        self.weights = self.inverse.apply(&self.bias).expect("bias has state dimension");
    }

    /// `‖w − M⁻¹ b‖∞`.
    pub fn weight_residual(&self) -> f64 {
        let fresh = self.inverse.apply(&self.bias).expect("bias has state dimension");
        fresh.iter().zip(&self.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: v.len() });
        }
        Ok(())
    }
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"NBSTATE\0";
const SNAPSHOT_VERSION: u32 = 1;

impl BanditState {
    /// Binary little-endian dump: magic, version, dim, updates, logdet,
    /// trace, then `M⁻¹` (row-major), `b` and `w`. Round-trips bit-exactly.
    pub fn write_snapshot(&self, mut out: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(48 + 8 * (self.dim() * (self.dim() + 2)));
        buf.extend_from_slice(SNAPSHOT_MAGIC);
        buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.dim() as u64).to_le_bytes());
        buf.extend_from_slice(&self.updates().to_le_bytes());
        buf.extend_from_slice(&self.logdet().to_le_bytes());
        buf.extend_from_slice(&self.trace.to_le_bytes());
        for x in self.inverse.to_dense().iter().chain(&self.bias).chain(&self.weights) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn read_snapshot(mut input: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes).map_err(|e| Error::Snapshot(e.to_string()))?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        if cur.take(8)? != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let dim = usize::try_from(cur.u64()?).map_err(|_| Error::Snapshot("dim overflows".into()))?;
        let updates = cur.u64()?;
        let logdet = cur.f64()?;
        let trace = cur.f64()?;
        let expected = dim.checked_mul(dim + 2).and_then(|c| c.checked_mul(8));
        if expected != Some(bytes.len() - cur.pos) {
            return Err(Error::Snapshot(format!("payload length does not match dim {dim}")));
        }
        let inv = (0..dim * dim).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let bias = (0..dim).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let weights = (0..dim).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let inverse = IncrementalInverse::from_parts(dim, inv, logdet, updates)?;
        Ok(Self { inverse, bias, weights, trace })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self.bytes.get(self.pos..end).ok_or_else(|| Error::Snapshot("truncated".into()))?;
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn e(dim: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }

    #[test]
    fn cb_examples() {
        let p = ConfidencePolicy::simplified(1.0);
        let mut s = BanditState::new(3);
        assert_abs_diff_eq!(s.cb(&p, &e(3, 0), 1).unwrap(), 2f64.ln().sqrt(), epsilon = 1e-15);
        assert_eq!(s.cb(&p, &[0.0; 3], 1).unwrap(), 0.0);
        let before = s.cb(&p, &e(3, 0), 5).unwrap();
        s.update(&e(3, 0), 0.0).unwrap();
        let after = s.cb(&p, &e(3, 0), 5).unwrap();
        assert_abs_diff_eq!(after / before, 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn theoretical_bonus_includes_own_increment() {
        let p = ConfidencePolicy::Theoretical { sigma: 2.0, delta: 0.1, norm_bound: 0.5 };
        let s = BanditState::new(2);
        let expect = 1.0 * (2.0 * (2f64.ln() - 0.1f64.ln()).sqrt() + 0.5);
        assert_abs_diff_eq!(s.cb(&p, &e(2, 1), 1).unwrap(), expect, epsilon = 1e-14);
        assert!(ConfidencePolicy::Theoretical { sigma: 1.0, delta: 1.0, norm_bound: 0.0 }.validate().is_err());
        assert!(ConfidencePolicy::simplified(0.0).validate().is_err());
    }

    #[test]
    fn select_examples() {
        let p = ConfidencePolicy::simplified(1.0);
        let s = BanditState::new(2);
        assert_eq!(s.select(&p, &[vec![0.3, 0.1]], 1).unwrap(), 0);
        assert_eq!(s.select(&p, &[vec![1.0, 0.0], vec![0.0, 0.5]], 1).unwrap(), 0);
        assert_eq!(s.select(&p, &[vec![0.0, 0.5], vec![1.0, 0.0]], 1).unwrap(), 1);
        assert_eq!(s.select(&p, &[vec![0.2, 0.2], vec![0.2, 0.2]], 1).unwrap(), 0);
        assert!(matches!(s.select(&p, &[], 1), Err(Error::EmptyCandidates)));
    }

    #[test]
    fn update_examples() {
        let mut s = BanditState::new(2);
        s.update(&e(2, 0), 1.0).unwrap();
        assert_abs_diff_eq!(s.weights()[0], 0.5, epsilon = 1e-15);
        assert_eq!(s.weights()[1], 0.0);
        s.update(&e(2, 0), 1.0).unwrap();
        assert_abs_diff_eq!(s.weights()[0], 2.0 / 3.0, epsilon = 1e-15);

        let mut z = BanditState::new(2);
        z.update(&e(2, 1), 0.0).unwrap();
        assert_eq!(z.bias(), &[0.0, 0.0]);
        assert_eq!(z.updates(), 1);
        assert!(matches!(z.update(&e(2, 1), 1.5), Err(Error::PayoffOutOfRange(_))));
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let mut s = BanditState::new(3);
        s.update(&[0.6, 0.0, 0.8], 0.7).unwrap();
        s.update(&[0.1, -0.9, 0.2], -0.3).unwrap();
        let mut buf = Vec::new();
        s.write_snapshot(&mut buf).unwrap();
        let back = BanditState::read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        assert!(BanditState::read_snapshot(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(BanditState::read_snapshot(bad.as_slice()).is_err());
    }
}
