//! 4Cliques-style synthetic users: one random unit vector per clique.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Environment, Feedback};
use crate::bandit::ContextEvent;
use crate::error::{Error, Result};
use crate::graph::{inject_graph_noise, make_4cliques, NoiseReport, UserGraph};
use crate::linalg::{dot, norm};
use crate::rng::{seeded, stream, Purpose};

/// Per-user parameter vectors `u_1, …, u_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    vectors: Vec<Vec<f64>>,
}

impl GroundTruth {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let d = vectors.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::invalid("ground truth needs at least one user and d >= 1"));
        }
        if let Some(bad) = vectors.iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: bad.len() });
        }
        Ok(Self { vectors })
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn d(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// `U = (u_1ᵀ, …, u_nᵀ)ᵀ`.
    pub fn stacked(&self) -> Vec<f64> {
        self.vectors.concat()
    }

    /// `u_iᵀ x`.
    pub fn expected_payoff(&self, i: usize, x: &[f64]) -> f64 {
        dot(&self.vectors[i], x)
    }
}

/// Uniform direction on the unit sphere in `d` dimensions.
pub fn unit_vector(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `clique_count` i.i.d. uniform unit vectors, each shared by the
/// `clique_size` consecutive users of its clique.
pub fn synth_ground_truth(clique_count: usize, clique_size: usize, d: usize, seed: u64) -> Result<GroundTruth> {
    if clique_count == 0 || clique_size == 0 || d == 0 {
        return Err(Error::invalid("clique count, clique size and d must be positive"));
    }
    let mut rng = seeded(seed, Purpose::GroundTruth);
    let per_clique: Vec<Vec<f64>> = (0..clique_count).map(|_| unit_vector(d, &mut rng)).collect();
    GroundTruth::new(per_clique.iter().flat_map(|u| std::iter::repeat(u.clone()).take(clique_size)).collect())
}

/// `u_iᵀ x + ε` with `ε ~ Uniform[−z, z]`, unclipped.
pub fn synth_payoff(gt: &GroundTruth, i: usize, x: &[f64], z: f64, rng: &mut impl Rng) -> f64 {
    gt.expected_payoff(i, x) + uniform_noise(z, rng)
}

fn uniform_noise(z: f64, rng: &mut impl Rng) -> f64 {
    if z > 0.0 {
        rng.gen_range(-z..=z)
    } else {
        0.0
    }
}

/// Uniform user and `set_size` uniform unit contexts, drawn from the
/// `(seed, t)` context stream.
pub fn sample_synth_context_set(n: usize, d: usize, set_size: usize, seed: u64, t: u64) -> ContextEvent {
    let mut rng = stream(seed, t, Purpose::Context);
    let user = rng.gen_range(0..n);
    let candidates = (0..set_size).map(|_| unit_vector(d, &mut rng)).collect();
    ContextEvent { t, user, candidates }
}

/// Synthetic environment with known ground truth and uniform payoff noise.
#[derive(Debug, Clone)]
pub struct SynthEnv {
    pub truth: GroundTruth,
    pub set_size: usize,
    /// Half-width `z` of the payoff noise.
    pub noise: f64,
}

impl SynthEnv {
    pub fn new(truth: GroundTruth, set_size: usize, noise: f64) -> Result<Self> {
        if set_size == 0 {
            return Err(Error::invalid("context set size must be positive"));
        }
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(Error::invalid(format!("payoff noise must be >= 0, got {noise}")));
        }
        Ok(Self { truth, set_size, noise })
    }

    /// Sub-Gaussian parameter conventions for the noise: `(z, z/√3)`.
    pub fn sigmas(&self) -> (f64, f64) {
        (self.noise, self.noise / 3f64.sqrt())
    }
}

impl Environment for SynthEnv {
    fn users(&self) -> usize {
        self.truth.n()
    }

    fn dim(&self) -> usize {
        self.truth.d()
    }

    fn event(&self, seed: u64, t: u64) -> ContextEvent {
        sample_synth_context_set(self.users(), self.dim(), self.set_size, seed, t)
    }

    /// One noise draw per round, shared by every candidate, so the payoff
    /// any policy would have seen is fixed by `(seed, t)`.
    fn feedback(&self, seed: u64, event: &ContextEvent) -> Feedback {
        let mut rng = stream(seed, event.t, Purpose::PayoffNoise);
        let eps = uniform_noise(self.noise, &mut rng);
        let expected: Vec<f64> = event.candidates.iter().map(|x| self.truth.expected_payoff(event.user, x)).collect();
        Feedback::clipped(expected.iter().map(|e| e + eps).collect(), Some(expected))
    }
}

/// A 4Cliques instance: clique ground truth, the clean graph, and the noisy
/// graph the algorithms are given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourCliques {
    pub clique_count: usize,
    pub clique_size: usize,
    pub d: usize,
    pub set_size: usize,
    /// Expected number of toggled node pairs.
    pub graph_noise: f64,
    /// Payoff noise half-width `z`.
    pub payoff_noise: f64,
}

impl Default for FourCliques {
    fn default() -> Self {
        Self { clique_count: 4, clique_size: 25, d: 25, set_size: 10, graph_noise: 0.0, payoff_noise: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct FourCliquesInstance {
    pub clean: UserGraph,
    pub noisy: UserGraph,
    pub noise: NoiseReport,
    pub env: SynthEnv,
}

impl FourCliques {
    /// Ground truth and graph noise are both drawn from `seed`, each from its
    /// own stream.
    pub fn build(&self, seed: u64) -> Result<FourCliquesInstance> {
        let clean = make_4cliques(self.clique_count, self.clique_size)?;
        let (noisy, noise) = inject_graph_noise(&clean, self.graph_noise, seed)?;
        let truth = synth_ground_truth(self.clique_count, self.clique_size, self.d, seed)?;
        Ok(FourCliquesInstance { clean, noisy, noise, env: SynthEnv::new(truth, self.set_size, self.payoff_noise)? })
    }
}
