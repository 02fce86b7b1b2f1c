//! Environments: synthetic clique users and implicit-feedback real data.

mod cache;
mod fixture;
mod hetrec;
mod synth;
mod tags;

pub use cache::{cache_key, read_feature_cache, read_prepared, write_feature_cache, write_prepared, Prepared};
pub use fixture::{write_bookmark_fixture, FixtureParams};
pub use hetrec::{
    load_hetrec, restrict_users, sample_context_set, Dataset, DatasetKind, DatasetStats, Interactions, ItemSet,
    LoadOptions, RealEnv,
};
pub use synth::{
    sample_synth_context_set, synth_ground_truth, FourCliques, FourCliquesInstance, synth_payoff, unit_vector, GroundTruth, SynthEnv,
};
pub use tags::{build_item_features, split_tags, tfidf, FeatureParams, ItemFeatures, TagStats};

use crate::bandit::ContextEvent;

/// Payoffs every candidate of a round would have produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    /// Realized payoffs in `[−1, 1]`.
    pub payoffs: Vec<f64>,
    /// Expected payoffs, when the environment knows them.
    pub expected: Option<Vec<f64>>,
    /// Realized payoffs that had to be clipped into `[−1, 1]`.
    pub clipped: usize,
}

impl Feedback {
    pub fn clipped(raw: Vec<f64>, expected: Option<Vec<f64>>) -> Self {
        let clipped = raw.iter().filter(|a| a.abs() > 1.0).count();
        let payoffs = raw.into_iter().map(|a| a.clamp(-1.0, 1.0)).collect();
        Self { payoffs, expected, clipped }
    }

    /// `ā_t`, the mean payoff of a uniformly random choice.
    pub fn baseline(&self) -> f64 {
        self.payoffs.iter().sum::<f64>() / self.payoffs.len() as f64
    }

    /// `max_k E[a_k] − E[a_chosen]`, when expectations are known.
    pub fn regret(&self, chosen: usize) -> Option<f64> {
        let e = self.expected.as_ref()?;
        let best = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((best - e[chosen]).max(0.0))
    }
}

/// A reproducible stream of rounds: everything is a pure function of
/// `(seed, t)`, so different algorithms face identical rounds.
pub trait Environment: Send + Sync {
    fn users(&self) -> usize;
    fn dim(&self) -> usize;
    fn event(&self, seed: u64, t: u64) -> ContextEvent;
    fn feedback(&self, seed: u64, event: &ContextEvent) -> Feedback;
}
