use rand::Rng;

use super::UserGraph;
use crate::error::{Error, Result};
use crate::rng::{seeded, Purpose};

/// Disjoint union of `clique_count` complete graphs on `clique_size` nodes.
/// Clique `c` holds nodes `c * clique_size .. (c + 1) * clique_size`.
pub fn make_4cliques(clique_count: usize, clique_size: usize) -> Result<UserGraph> {
    if clique_count == 0 || clique_size == 0 {
        return Err(Error::invalid("clique count and size must be positive"));
    }
    let n = clique_count * clique_size;
    let mut edges = Vec::with_capacity(clique_count * clique_size * (clique_size - 1) / 2);
    for c in 0..clique_count {
        let base = c * clique_size;
        for i in 0..clique_size {
            for j in i + 1..clique_size {
                edges.push((base + i, base + j));
            }
        }
    }
    UserGraph::from_unweighted(n, edges)
}

/// Threshold above which a uniform draw toggles a pair, chosen so that the
/// expected number of toggles equals `noise_count`.
pub fn noise_threshold(n: usize, noise_count: f64) -> Result<f64> {
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    if !(noise_count >= 0.0) || noise_count > pairs {
        return Err(Error::invalid(format!(
            "noise count {noise_count} outside [0, {pairs}] for {n} nodes"
        )));
    }
    if pairs == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - noise_count / pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NoiseReport {
    pub added: usize,
    pub removed: usize,
}

impl NoiseReport {
    pub fn toggled(&self) -> usize {
        self.added + self.removed
    }
}

/// XORs the adjacency matrix with a thresholded symmetric uniform noise
/// matrix. Every unordered pair gets one draw, in lexicographic order, from
/// the stream for `seed`; applying the same seed twice restores `g`.
pub fn inject_graph_noise(g: &UserGraph, noise_count: f64, seed: u64) -> Result<(UserGraph, NoiseReport)> {
    if !g.is_unweighted() {
        return Err(Error::invalid("graph noise needs an unweighted graph"));
    }
    let n = g.n();
    let tau = noise_threshold(n, noise_count)?;
    let mut out = g.clone();
    let mut report = NoiseReport::default();
    if noise_count == 0.0 {
        return Ok((out, report));
    }
    let mut rng = seeded(seed, Purpose::GraphNoise);
    for i in 0..n {
        for j in i + 1..n {
            let u: f64 = rng.gen();
            if u > tau {
                if out.toggle_edge(i, j) {
                    report.added += 1;
                } else {
                    report.removed += 1;
                }
            }
        }
    }
    Ok((out, report))
}
