use crate::bandit::ContextEvent;
use crate::data::GroundTruth;
use crate::error::{Error, Result};
use crate::graph::{SharingTransform, UserGraph};
use crate::linalg::{dot, sym_apply};

/// `(max_k u_iᵀ x_k) − u_iᵀ x_chosen` for the event's user.
pub fn instantaneous_regret(gt: &GroundTruth, event: &ContextEvent, chosen: usize) -> Result<f64> {
    if event.user >= gt.n() {
        return Err(Error::OutOfRange { what: "users", index: event.user, len: gt.n() });
    }
    if chosen >= event.candidates.len() {
        return Err(Error::OutOfRange { what: "candidates", index: chosen, len: event.candidates.len() });
    }
    let mut best = f64::NEG_INFINITY;
    for x in &event.candidates {
        if x.len() != gt.d() {
            return Err(Error::DimensionMismatch { expected: gt.d(), actual: x.len() });
        }
        best = best.max(gt.expected_payoff(event.user, x));
    }
    Ok((best - gt.expected_payoff(event.user, &event.candidates[chosen])).max(0.0))
}

fn check_sizes(gt: &GroundTruth, n: usize) -> Result<()> {
    if gt.n() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: gt.n() });
    }
    Ok(())
}

/// `Σ_i ‖u_i‖² + Σ_{(i,j)∈E} w_ij ‖u_i − u_j‖²`.
pub fn multitask_norm(gt: &GroundTruth, g: &UserGraph) -> Result<f64> {
    check_sizes(gt, g.n())?;
    let own: f64 = gt.vectors().iter().map(|u| dot(u, u)).sum();
    let coupling: f64 = g
        .edges()
        .map(|(i, j, w)| {
            let diff: Vec<f64> = gt.vector(i).iter().zip(gt.vector(j)).map(|(a, b)| a - b).collect();
            w * dot(&diff, &diff)
        })
        .sum();
    Ok(own + coupling)
}

/// `Uᵀ (A ⊗ I_d) U = Σ_{ij} A_ij u_iᵀ u_j`.
pub fn multitask_norm_quadratic(gt: &GroundTruth, transform: &SharingTransform) -> Result<f64> {
    check_sizes(gt, transform.n())?;
    let a = transform.a();
    let n = gt.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let aij = a.get(i, j);
            if aij != 0.0 {
                total += aij * dot(gt.vector(i), gt.vector(j));
            }
        }
    }
    Ok(total)
}

/// `Ũ = (A^{1/2} ⊗ I_d) U`, stacked. Computed from `A` itself, not from the
/// transform's `A^{-1/2}`, so the two sides of the appendix identities come
/// from independent factorizations.
pub fn lifted_truth(gt: &GroundTruth, transform: &SharingTransform) -> Result<Vec<f64>> {
    check_sizes(gt, transform.n())?;
    let root = sym_apply(transform.a(), |l| l.max(0.0).sqrt())?;
    let (n, d) = (gt.n(), gt.d());
    let mut out = vec![0.0; n * d];
    for j in 0..n {
        for i in 0..n {
            let r = root.get(j, i);
            if r != 0.0 {
                for (o, u) in out[j * d..(j + 1) * d].iter_mut().zip(gt.vector(i)) {
                    *o += r * u;
                }
            }
        }
    }
    Ok(out)
}

/// `2 √(T (2σ² ln(|M_T|/δ) + 2L) (1 + B²) ln|M_T|)`, evaluated as written.
pub fn regret_bound(rounds: u64, sigma: f64, delta: f64, multitask: f64, b: f64, logdet: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if rounds == 0 {
        return Err(Error::invalid("the bound needs T >= 1"));
    }
    for (name, v) in [("sigma", sigma), ("multitask norm", multitask), ("B", b), ("ln|M_T|", logdet)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    let t = rounds as f64;
    let inner = 2.0 * sigma * sigma * (logdet - delta.ln()) + 2.0 * multitask;
    Ok(2.0 * (t * inner * (1.0 + b * b) * logdet).sqrt())
}

/// The bound under both noise conventions for uniform payoff noise on
/// `[−z, z]`: `σ = z` and `σ = z/√3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPair {
    pub safe: f64,
    pub variance_matched: f64,
}

pub fn regret_bounds_uniform(rounds: u64, z: f64, delta: f64, multitask: f64, b: f64, logdet: f64) -> Result<BoundPair> {
    Ok(BoundPair {
        safe: regret_bound(rounds, z, delta, multitask, b, logdet)?,
        variance_matched: regret_bound(rounds, z / 3f64.sqrt(), delta, multitask, b, logdet)?,
    })
}
