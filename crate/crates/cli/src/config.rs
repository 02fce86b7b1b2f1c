use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use netbandit::bandit::Algorithm;

/// Default α grid, multiplied by the largest candidate norm.
pub const DEFAULT_ALPHA_GRID: [f64; 6] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    /// Synthetic clique users.
    FourCliques,
    /// A directory written by `netbandit prepare`.
    Prepared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    /// Prepared directory, when `source = "prepared"`.
    pub path: Option<PathBuf>,
    pub clique_count: usize,
    pub clique_size: usize,
    pub dim: usize,
    /// Candidates per round; 10 for cliques and 25 for real data if unset.
    pub set_size: Option<usize>,
    /// Expected toggled node pairs, one run grid row per value.
    pub graph_noise: Vec<f64>,
    /// Payoff noise half-widths, one run grid column per value.
    pub payoff_noise: Vec<f64>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            source: DatasetSource::FourCliques,
            path: None,
            clique_count: 4,
            clique_size: 25,
            dim: 25,
            set_size: None,
            graph_noise: vec![0.0],
            payoff_noise: vec![0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Simplified,
    Theoretical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Explicit α values. When empty the default grid is scaled by `B`.
    pub alpha: Vec<f64>,
    pub sigma: Option<f64>,
    pub delta: f64,
    /// Upper bound on `‖Ũ‖`; computed from the ground truth on cliques if unset.
    pub norm_bound: Option<f64>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { kind: PolicyKind::Simplified, alpha: Vec::new(), sigma: None, delta: 0.05, norm_bound: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithms: Vec<String>,
    pub rounds: u64,
    pub seeds: Vec<u64>,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    /// Seed for the spectral clustering used by MACRO and BLOCK.
    pub cluster_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithms: vec!["goblin".into(), "linucb-ind".into(), "linucb-sin".into()],
            rounds: 5000,
            seeds: vec![1],
            jobs: 0,
            cluster_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub policy: PolicyConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn algorithms(&self) -> anyhow::Result<Vec<Algorithm>> {
        self.run
            .algorithms
            .iter()
            .map(|a| a.parse::<Algorithm>().map_err(|e| anyhow::anyhow!("{e}")))
            .collect()
    }

    pub fn set_size(&self) -> usize {
        self.dataset.set_size.unwrap_or(match self.dataset.source {
            DatasetSource::FourCliques => 10,
            DatasetSource::Prepared => 25,
        })
    }

    /// Everything that can be checked before any run starts.
    pub fn validate(&self) -> anyhow::Result<()> {
        let d = &self.dataset;
        if self.run.rounds == 0 {
            bail!("rounds must be at least 1");
        }
        if self.run.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        if self.run.algorithms.is_empty() {
            bail!("at least one algorithm is required");
        }
        self.algorithms()?;
        if self.set_size() == 0 {
            bail!("set_size must be positive");
        }
        match d.source {
            DatasetSource::FourCliques => {
                if d.clique_count == 0 || d.clique_size == 0 || d.dim == 0 {
                    bail!("clique_count, clique_size and dim must be positive");
                }
                if d.graph_noise.is_empty() || d.payoff_noise.is_empty() {
                    bail!("graph_noise and payoff_noise need at least one value each");
                }
                let n = d.clique_count * d.clique_size;
                let pairs = (n * (n - 1) / 2) as f64;
                if let Some(g) = d.graph_noise.iter().find(|g| !(**g >= 0.0 && **g <= pairs)) {
                    bail!("graph noise {g} outside [0, {pairs}]");
                }
                if let Some(z) = d.payoff_noise.iter().find(|z| !(**z >= 0.0 && z.is_finite())) {
                    bail!("payoff noise {z} must be finite and >= 0");
                }
            }
            DatasetSource::Prepared => {
                if d.path.is_none() {
                    bail!("dataset.path is required for prepared data");
                }
                // Real payoffs are observed, not simulated.
                if d.payoff_noise.iter().any(|z| *z != 0.0) {
                    bail!("payoff noise applies to synthetic data only");
                }
                if d.graph_noise.is_empty() || d.graph_noise.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                    bail!("graph_noise needs finite values >= 0");
                }
            }
        }
        let p = &self.policy;
        if let Some(a) = p.alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            bail!("alpha values must be positive, got {a}");
        }
        if p.kind == PolicyKind::Theoretical {
            if !(p.delta > 0.0 && p.delta < 1.0) {
                bail!("delta must lie in (0, 1), got {}", p.delta);
            }
            if matches!(p.sigma, Some(s) if !(s >= 0.0 && s.is_finite())) {
                bail!("sigma must be >= 0");
            }
            if matches!(p.norm_bound, Some(b) if !(b >= 0.0 && b.is_finite())) {
                bail!("norm_bound must be >= 0");
            }
            if d.source == DatasetSource::Prepared && (p.norm_bound.is_none() || p.sigma.is_none()) {
                bail!("the theoretical policy on real data needs explicit sigma and norm_bound");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.set_size(), 10);
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = ExperimentConfig::from_toml("[run]\nrounds = 0\n").unwrap();
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig::from_toml("[policy]\nalpha = [0.1, -1.0]\n").unwrap();
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig::from_toml("[run]\nalgorithms = [\"nope\"]\n").unwrap();
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::from_toml("[run]\nbogus = 1\n").is_err());
        let bad = ExperimentConfig::from_toml("[dataset]\nsource = \"prepared\"\n").unwrap();
        assert!(bad.validate().is_err());
    }
}
