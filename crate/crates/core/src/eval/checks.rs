//! Numerical checks shared by the verify suite and the test suites.

use rand::Rng;

use super::bounds::{lifted_truth, multitask_norm};
use crate::bandit::{Algorithm, ConfidencePolicy, Runner, RunnerOptions};
use crate::data::{unit_vector, Environment, GroundTruth, SynthEnv};
use crate::error::{Error, Result};
use crate::graph::{SharingTransform, UserGraph};
use crate::linalg::{dot, eigh, norm, sym_apply, IncrementalInverse, SymMatrix};
use crate::rng::{seeded, stream, Purpose};

pub const IDENTITY_TOL: f64 = 1e-9;

/// Outcome of the lifted-space identity checks.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    /// Largest `|Ũᵀφ̃ − u_iᵀx|`.
    pub max_inner_gap: f64,
    /// Largest `‖φ̃‖ − ‖x‖` (non-positive when the contraction holds).
    pub max_norm_excess: f64,
    /// `|‖Ũ‖² − L| / max(L, 1)`.
    pub norm_rel_gap: f64,
    pub failures: Vec<String>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks, for every sampled `(i, x)`:
/// (a) `Ũᵀφ̃ = u_iᵀx`, (b) `‖φ̃‖ ≤ ‖x‖`, and once (c) `‖Ũ‖² = L(u_1, …, u_n)`.
pub fn identity_checks(gt: &GroundTruth, g: &UserGraph, samples: &[(usize, Vec<f64>)]) -> Result<IdentityReport> {
    identity_checks_with(gt, g, &SharingTransform::build(g)?, samples)
}

/// As [`identity_checks`], lifting contexts with a caller-supplied transform.
/// `Ũ` is always derived from `A` via its own eigendecomposition, so a
/// corrupted `A^{-1/2}` shows up as a failure of (a).
pub fn identity_checks_with(
    gt: &GroundTruth,
    g: &UserGraph,
    transform: &SharingTransform,
    samples: &[(usize, Vec<f64>)],
) -> Result<IdentityReport> {
    let u_tilde = lifted_truth(gt, transform)?;
    let l = multitask_norm(gt, g)?;
    let mut report = IdentityReport {
        samples: samples.len(),
        max_inner_gap: 0.0,
        max_norm_excess: f64::NEG_INFINITY,
        norm_rel_gap: (dot(&u_tilde, &u_tilde) - l).abs() / l.max(1.0),
        failures: Vec::new(),
    };
    if report.norm_rel_gap > IDENTITY_TOL {
        report.failures.push(format!("(c) |U~|^2 - L relative gap {:.3e} (L = {l})", report.norm_rel_gap));
    }
    for (k, (i, x)) in samples.iter().enumerate() {
        if x.len() != gt.d() {
            return Err(Error::DimensionMismatch { expected: gt.d(), actual: x.len() });
        }
        let phi = transform.lift(*i, x)?;
        let gap = (dot(&u_tilde, &phi) - gt.expected_payoff(*i, x)).abs();
        report.max_inner_gap = report.max_inner_gap.max(gap);
        if gap > IDENTITY_TOL {
            report.failures.push(format!("(a) sample {k} (user {i}): U~'phi~ - u'x = {gap:.3e}"));
        }
        let excess = norm(&phi) - norm(x);
        report.max_norm_excess = report.max_norm_excess.max(excess);
        if excess > 1e-12 * norm(x).max(1.0) {
            report.failures.push(format!("(b) sample {k} (user {i}): |phi~| exceeds |x| by {excess:.3e}"));
        }
    }
    Ok(report)
}

/// A copy of `transform` with entry `(0, 0)` of `A^{-1/2}` scaled by 1.1.
pub fn corrupt_transform(transform: &SharingTransform) -> Result<SharingTransform> {
    let mut bad = transform.a_inv_sqrt().clone();
    bad.set(0, 0, bad.get(0, 0) * 1.1);
    SharingTransform::from_parts(transform.a().clone(), bad)
}

/// A random instance for the identity checks: graph with edge probability
/// drawn per instance, random (not necessarily unit) user vectors and
/// `samples` random contexts.
pub fn random_identity_instance(
    n: usize,
    d: usize,
    samples: usize,
    seed: u64,
) -> Result<(UserGraph, GroundTruth, Vec<(usize, Vec<f64>)>)> {
    let mut rng = seeded(seed, Purpose::Fixture);
    let p: f64 = rng.gen_range(0.0..1.0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j, rng.gen_range(0.5..2.0)));
            }
        }
    }
    let g = UserGraph::from_edges(n, edges)?;
    let gt = GroundTruth::new((0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect())?;
    let xs = (0..samples)
        .map(|_| {
            let scale = rng.gen_range(0.1..2.0);
            (rng.gen_range(0..n), unit_vector(d, &mut rng).into_iter().map(|v| v * scale).collect())
        })
        .collect();
    Ok((g, gt, xs))
}

/// Result of feeding `T` unit contexts to GOB.Lin.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub n: usize,
    pub d: usize,
    pub rounds: u64,
    /// `tr(M_T)` as tracked by the bandit state.
    pub tracked: f64,
    /// `nd + Σ_t (A⁻¹)_{i_t i_t}`, with `A⁻¹` from an eigendecomposition of `A`.
    pub expected: f64,
    /// Closed form for the edgeless (`nd + T`) or complete (`nd + 2T/(n+1)`)
    /// graph, when `g` is one of them.
    pub closed_form: Option<f64>,
    /// `tr(M_T)` from the eigenvalues of the dense `M_T⁻¹`, for `dn ≤ 400`.
    pub dense: Option<f64>,
}

impl TraceReport {
    /// Largest deviation of any available computation from `tracked`.
    pub fn max_gap(&self) -> f64 {
        [Some(self.expected), self.closed_form, self.dense]
            .into_iter()
            .flatten()
            .map(|v| (v - self.tracked).abs())
            .fold(0.0, f64::max)
    }
}

/// Runs GOB.Lin updates on `rounds` uniformly random unit contexts (payoff 0)
/// and compares `tr(M_T)` against the closed forms.
pub fn trace_extremes_check(g: &UserGraph, d: usize, rounds: u64, seed: u64) -> Result<TraceReport> {
    let n = g.n();
    let mut runner = Runner::with_options(
        Algorithm::GobLin,
        g,
        d,
        ConfidencePolicy::simplified(1.0),
        RunnerOptions { dense: true, ..RunnerOptions::default() },
    )?;
    let transform = SharingTransform::build(g)?;
    let a_inv = sym_apply(transform.a(), |l| 1.0 / l)?;
    let mut expected = (n * d) as f64;
    for t in 1..=rounds {
        let mut rng = stream(seed, t, Purpose::Context);
        let user = rng.gen_range(0..n);
        let x = unit_vector(d, &mut rng);
        runner.update(user, &x, 0.0)?;
        expected += a_inv.get(user, user);
    }
    let gob = runner.graph_engine().expect("GOB.Lin runs on the graph engine");
    let tracked = gob.trace();
    let complete = g.is_unweighted() && g.edge_count() == n * n.saturating_sub(1) / 2;
    let closed_form = if g.edge_count() == 0 {
        Some((n * d) as f64 + rounds as f64)
    } else if complete {
        Some((n * d) as f64 + 2.0 * rounds as f64 / (n + 1) as f64)
    } else {
        None
    };
    let dn = n * d;
    let dense = if dn <= 400 {
        let inv = gob.dense_inverse();
        let m = SymMatrix::from_upper(dn, |i, j| inv[i * dn + j]);
        Some(eigh(&m)?.values.iter().map(|l| 1.0 / l).sum())
    } else {
        None
    };
    Ok(TraceReport { n, d, rounds, tracked, expected, closed_form, dense })
}

/// Deviation of an incrementally maintained inverse from direct inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseOracle {
    pub max_entry_gap: f64,
    pub logdet_gap: f64,
}

/// Applies `updates` random rank-one updates at `dim` and compares against
/// `M⁻¹` and `ln|M|` obtained from an eigendecomposition of the accumulated `M`.
pub fn inverse_oracle_check(dim: usize, updates: usize, seed: u64) -> Result<InverseOracle> {
    let mut rng = seeded(seed, Purpose::Fixture);
    let mut inc = IncrementalInverse::new(dim);
    let mut m = SymMatrix::identity(dim);
    for _ in 0..updates {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        inc.rank_one_update(&v)?;
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, m.get(i, j) + v[i] * v[j]);
            }
        }
    }
    let e = eigh(&m)?;
    let direct = sym_apply(&m, |l| 1.0 / l)?;
    let logdet: f64 = e.values.iter().map(|l| l.ln()).sum();
    let mut max_entry_gap = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            max_entry_gap = max_entry_gap.max((inc.get(i, j) - direct.get(i, j)).abs());
        }
    }
    Ok(InverseOracle { max_entry_gap, logdet_gap: (inc.logdet() - logdet).abs() })
}

/// Dense view of everything a runner stores: `M⁻¹` (block diagonal across
/// states), `b`, `w`, and the total `ln|M|`.
struct StoredScalars {
    inverse: Vec<f64>,
    bias: Vec<f64>,
    weights: Vec<f64>,
    logdet: f64,
}

fn stored_scalars(r: &Runner) -> StoredScalars {
    if let Some(gob) = r.graph_engine() {
        let (bias, weights) = gob.dense_bias_weights();
        return StoredScalars { inverse: gob.dense_inverse(), bias, weights, logdet: gob.logdet() };
    }
    let states = r.states();
    let dim: usize = states.iter().map(|s| s.dim()).sum();
    let mut out = StoredScalars { inverse: vec![0.0; dim * dim], bias: Vec::new(), weights: Vec::new(), logdet: 0.0 };
    let mut off = 0;
    for s in states {
        let k = s.dim();
        for i in 0..k {
            for j in 0..k {
                out.inverse[(off + i) * dim + off + j] = s.inverse().get(i, j);
            }
        }
        out.bias.extend_from_slice(s.bias());
        out.weights.extend_from_slice(s.weights());
        out.logdet += s.logdet();
        off += k;
    }
    out
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// One side-by-side comparison of two configurations that must coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence {
    pub name: String,
    /// Rounds where the two runners chose different candidates.
    pub choice_mismatches: usize,
    /// Largest gap over every stored scalar after the last round.
    pub max_scalar_gap: f64,
}

impl Equivalence {
    pub fn holds(&self, tol: f64) -> bool {
        self.choice_mismatches == 0 && self.max_scalar_gap <= tol
    }
}

/// Runs `left` and `right` in lockstep on the same environment. Each runner
/// is fed its own choice; mismatches are counted.
pub fn compare_runners(
    name: &str,
    env: &dyn Environment,
    left: &mut Runner,
    right: &mut Runner,
    seed: u64,
    rounds: u64,
) -> Result<Equivalence> {
    let mut mismatches = 0;
    for t in 1..=rounds {
        let ev = env.event(seed, t);
        let fb = env.feedback(seed, &ev);
        let kl = left.select(ev.user, &ev.candidates, t)?;
        let kr = right.select(ev.user, &ev.candidates, t)?;
        if kl != kr {
            mismatches += 1;
        }
        left.update(ev.user, &ev.candidates[kl], fb.payoffs[kl])?;
        right.update(ev.user, &ev.candidates[kr], fb.payoffs[kr])?;
    }
    let (a, b) = (stored_scalars(left), stored_scalars(right));
    let gap = [
        max_gap(&a.inverse, &b.inverse),
        max_gap(&a.bias, &b.bias),
        max_gap(&a.weights, &b.weights),
        (a.logdet - b.logdet).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(Equivalence { name: name.to_owned(), choice_mismatches: mismatches, max_scalar_gap: gap })
}

/// The special cases that must reduce to the baselines:
/// GOB.Lin on an edgeless graph (dense and per-component storage) vs IND,
/// BLOCK with `n` singleton clusters vs IND, MACRO with one cluster vs SIN.
pub fn equivalence_suite(n: usize, d: usize, rounds: u64, seed: u64) -> Result<Vec<Equivalence>> {
    let mut rng = seeded(seed, Purpose::GraphNoise);
    let truth = GroundTruth::new((0..n).map(|_| unit_vector(d, &mut rng)).collect())?;
    let env = SynthEnv::new(truth, 10, 0.1)?;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.4) {
                edges.push((i, j));
            }
        }
    }
    let graph = UserGraph::from_unweighted(n, edges)?;
    let edgeless = UserGraph::new(n);
    let policy = ConfidencePolicy::simplified(0.5);
    let dense = RunnerOptions { dense: true, ..RunnerOptions::default() };
    let ind = || Runner::new(Algorithm::LinUcbInd, &edgeless, d, policy);

    let mut out = Vec::new();
    let mut gl = Runner::with_options(Algorithm::GobLin, &edgeless, d, policy, dense.clone())?;
    out.push(compare_runners("goblin on edgeless graph (dense) = linucb-ind", &env, &mut gl, &mut ind()?, seed, rounds)?);
    let mut gl = Runner::new(Algorithm::GobLin, &edgeless, d, policy)?;
    out.push(compare_runners("goblin on edgeless graph (per component) = linucb-ind", &env, &mut gl, &mut ind()?, seed, rounds)?);
    let mut block = Runner::new(Algorithm::GobLinBlock { clusters: n }, &graph, d, policy)?;
    out.push(compare_runners("goblin-block with singleton clusters = linucb-ind", &env, &mut block, &mut ind()?, seed, rounds)?);
    let mut mac = Runner::new(Algorithm::GobLinMacro { clusters: 1 }, &graph, d, policy)?;
    let mut sin = Runner::new(Algorithm::LinUcbSin, &graph, d, policy)?;
    out.push(compare_runners("goblin-macro with one cluster = linucb-sin", &env, &mut mac, &mut sin, seed, rounds)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_4cliques;

    #[test]
    fn identities_hold_and_fault_is_caught() {
        let (g, gt, xs) = random_identity_instance(12, 4, 20, 3).unwrap();
        let r = identity_checks(&gt, &g, &xs).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        let bad = corrupt_transform(&SharingTransform::build(&g).unwrap()).unwrap();
        let r = identity_checks_with(&gt, &g, &bad, &xs).unwrap();
        assert!(r.failures.iter().any(|f| f.starts_with("(a)")));
    }

    #[test]
    fn complete_graph_lift_norm() {
        let n = 50;
        let g = UserGraph::complete(n);
        let tr = SharingTransform::build(&g).unwrap();
        let x = vec![0.6, -0.8, 0.0];
        let phi = tr.lift(7, &x).unwrap();
        assert!((dot(&phi, &phi) - 2.0 / (n + 1) as f64).abs() < 1e-9);
    }

    #[test]
    fn trace_examples() {
        let r = trace_extremes_check(&UserGraph::new(10), 5, 100, 1).unwrap();
        assert_eq!(r.closed_form, Some(150.0));
        assert!(r.max_gap() < 1e-6, "{r:?}");
        let r = trace_extremes_check(&UserGraph::complete(9), 2, 100, 1).unwrap();
        assert_eq!(r.closed_form, Some(38.0));
        assert!(r.max_gap() < 1e-6, "{r:?}");
        let r = trace_extremes_check(&UserGraph::new(1), 3, 40, 1).unwrap();
        assert_eq!(r.closed_form, Some(43.0));
        let r = trace_extremes_check(&make_4cliques(2, 3).unwrap(), 2, 60, 2).unwrap();
        assert_eq!(r.closed_form, None);
        assert!(r.max_gap() < 1e-6, "{r:?}");
    }

    #[test]
    fn inverse_oracle_small() {
        let o = inverse_oracle_check(6, 200, 5).unwrap();
        assert!(o.max_entry_gap < 1e-10 && o.logdet_gap < 1e-8, "{o:?}");
    }

    #[test]
    fn equivalences_hold() {
        for e in equivalence_suite(6, 3, 120, 9).unwrap() {
            assert!(e.holds(1e-9), "{e:?}");
        }
    }
}
