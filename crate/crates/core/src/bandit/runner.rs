use std::fmt;
use std::str::FromStr;

use super::goblin::{GobLin, Grouping};
use super::state::{BanditState, ConfidencePolicy};
use crate::error::{Error, Result};
use crate::graph::{block_graph, macro_graph, spectral_cluster, Partition, UserGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    GobLin,
    /// One independent bandit per user.
    LinUcbInd,
    /// One bandit shared by every user.
    LinUcbSin,
    /// GOB.Lin on the graph of `clusters` macro nodes.
    GobLinMacro { clusters: usize },
    /// GOB.Lin on the graph with inter-cluster edges removed.
    GobLinBlock { clusters: usize },
}

impl Algorithm {
    pub fn clusters(&self) -> Option<usize> {
        match *self {
            Self::GobLinMacro { clusters } | Self::GobLinBlock { clusters } => Some(clusters),
            _ => None,
        }
    }

    pub fn uses_graph(&self) -> bool {
        !matches!(self, Self::LinUcbInd | Self::LinUcbSin)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GobLin => f.write_str("goblin"),
            Self::LinUcbInd => f.write_str("linucb-ind"),
            Self::LinUcbSin => f.write_str("linucb-sin"),
            Self::GobLinMacro { clusters } => write!(f, "goblin-macro-{clusters}"),
            Self::GobLinBlock { clusters } => write!(f, "goblin-block-{clusters}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// Accepts the `Display` names; `goblin-macro`/`goblin-block` need a
    /// `-<clusters>` suffix.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase().replace(['_', '.'], "-").replace("gob-lin", "goblin");
        let parse_m = |rest: &str| {
            rest.parse::<usize>().map_err(|_| Error::invalid(format!("bad cluster count in algorithm {s:?}")))
        };
        match lower.as_str() {
            "goblin" => Ok(Self::GobLin),
            "linucb-ind" => Ok(Self::LinUcbInd),
            "linucb-sin" => Ok(Self::LinUcbSin),
            other => {
                if let Some(rest) = other.strip_prefix("goblin-macro-") {
                    Ok(Self::GobLinMacro { clusters: parse_m(rest)? })
                } else if let Some(rest) = other.strip_prefix("goblin-block-") {
                    Ok(Self::GobLinBlock { clusters: parse_m(rest)? })
                } else {
                    Err(Error::invalid(format!(
                        "unknown algorithm {s:?}; expected goblin, linucb-ind, linucb-sin, goblin-macro-<m> or goblin-block-<m>"
                    )))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunnerOptions {
    /// Seed for the built-in spectral clusterer.
    pub cluster_seed: u64,
    /// Use this partition instead of clustering (MACRO/BLOCK only).
    pub partition: Option<Partition>,
    /// Store GOB.Lin as one dense state instead of per-component blocks.
    pub dense: bool,
}

#[derive(Debug, Clone)]
enum Engine {
    Independent(Vec<BanditState>),
    Shared(BanditState),
    Graph { gob: GobLin, route: Vec<usize> },
}

/// One configured algorithm serving `n` users with `d`-dimensional contexts.
#[derive(Debug, Clone)]
pub struct Runner {
    algorithm: Algorithm,
    policy: ConfidencePolicy,
    d: usize,
    n: usize,
    partition: Option<Partition>,
    engine: Engine,
}

impl Runner {
    pub fn new(algorithm: Algorithm, g: &UserGraph, d: usize, policy: ConfidencePolicy) -> Result<Self> {
        Self::with_options(algorithm, g, d, policy, RunnerOptions::default())
    }

    pub fn with_options(
        algorithm: Algorithm,
        g: &UserGraph,
        d: usize,
        policy: ConfidencePolicy,
        options: RunnerOptions,
    ) -> Result<Self> {
        policy.validate()?;
        if d == 0 {
            return Err(Error::invalid("context dimension must be positive"));
        }
        let n = g.n();
        if n == 0 {
            return Err(Error::invalid("graph has no users"));
        }
        let grouping = if options.dense { Grouping::Dense } else { Grouping::Components };
        let cluster = |m: usize| -> Result<Partition> {
            match &options.partition {
                Some(p) if p.n() != n => Err(Error::DimensionMismatch { expected: n, actual: p.n() }),
                Some(p) => Ok(p.clone()),
                None => spectral_cluster(g, m, options.cluster_seed),
            }
        };
        let (engine, partition) = match algorithm {
            Algorithm::LinUcbInd => (Engine::Independent(vec![BanditState::new(d); n]), None),
            Algorithm::LinUcbSin => (Engine::Shared(BanditState::new(d)), None),
            Algorithm::GobLin => (Engine::Graph { gob: GobLin::new(g, d, grouping)?, route: (0..n).collect() }, None),
            Algorithm::GobLinMacro { clusters } => {
                let p = cluster(clusters)?;
                let (mg, route) = macro_graph(g, &p)?;
                (Engine::Graph { gob: GobLin::new(&mg, d, grouping)?, route }, Some(p))
            }
            Algorithm::GobLinBlock { clusters } => {
                let p = cluster(clusters)?;
                let bg = block_graph(g, &p)?;
                let grouping = if options.dense { Grouping::Dense } else { Grouping::Custom(p.members()) };
                (Engine::Graph { gob: GobLin::new(&bg, d, grouping)?, route: (0..n).collect() }, Some(p))
            }
        };
        Ok(Self { algorithm, policy, d, n, partition, engine })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn policy(&self) -> &ConfidencePolicy {
        &self.policy
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The clustering used by MACRO/BLOCK.
    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    pub fn graph_engine(&self) -> Option<&GobLin> {
        match &self.engine {
            Engine::Graph { gob, .. } => Some(gob),
            _ => None,
        }
    }

    /// Every stored bandit state: per user (IND), the single shared one
    /// (SIN), or one per GOB.Lin block.
    pub fn states(&self) -> Vec<&BanditState> {
        match &self.engine {
            Engine::Independent(s) => s.iter().collect(),
            Engine::Shared(s) => vec![s],
            Engine::Graph { gob, .. } => (0..gob.block_count()).map(|k| gob.block_state(k)).collect(),
        }
    }

    /// Sum of `ln|M|` over all stored states.
    pub fn logdet(&self) -> f64 {
        match &self.engine {
            Engine::Graph { gob, .. } => gob.logdet(),
            _ => self.states().iter().map(|s| s.logdet()).sum(),
        }
    }

    fn check(&self, user: usize, x: &[f64]) -> Result<()> {
        if user >= self.n {
            return Err(Error::OutOfRange { what: "users", index: user, len: self.n });
        }
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: x.len() });
        }
        Ok(())
    }

    /// Picks a candidate for `user` at round `t` (1-based).
    pub fn select(&mut self, user: usize, candidates: &[Vec<f64>], t: u64) -> Result<usize> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        for x in candidates {
            self.check(user, x)?;
        }
        match &mut self.engine {
            Engine::Independent(states) => states[user].select(&self.policy, candidates, t),
            Engine::Shared(state) => state.select(&self.policy, candidates, t),
            Engine::Graph { gob, route } => gob.select(&self.policy, route[user], candidates, t),
        }
    }

    /// Feeds back payoff `a ∈ [−1, 1]` for context `x` served to `user`.
    pub fn update(&mut self, user: usize, x: &[f64], a: f64) -> Result<()> {
        self.check(user, x)?;
        match &mut self.engine {
            Engine::Independent(states) => states[user].update(x, a),
            Engine::Shared(state) => state.update(x, a),
            Engine::Graph { gob, route } => gob.update(route[user], x, a),
        }
    }
}
