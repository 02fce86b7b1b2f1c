//! Node clustering and the two graph compressions built on it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use super::UserGraph;
use crate::error::{Error, Result};
use crate::linalg::{eigh, SymMatrix};
use crate::rng::{seeded, Purpose};

pub const KMEANS_RESTARTS: usize = 50;
const KMEANS_MAX_ITERS: usize = 200;

/// Assignment of every node to one of `m` clusters, ids `0..m`, all used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    m: usize,
}

impl Partition {
    /// Validates contiguity: every id in `0..m` appears at least once.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let m = assignment.iter().max().map_or(0, |&c| c + 1);
        let mut seen = vec![false; m];
        for &c in &assignment {
            seen[c] = true;
        }
        if let Some(gap) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("cluster id {gap} is unused; ids must be contiguous")));
        }
        Ok(Self { assignment, m })
    }

    /// Relabels arbitrary cluster labels to `0..m` in increasing label order.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut ids: BTreeMap<usize, usize> = labels.iter().map(|&l| (l, 0)).collect();
        for (k, v) in ids.values_mut().enumerate() {
            *v = k;
        }
        let assignment = labels.iter().map(|l| ids[l]).collect();
        Self { assignment, m: ids.len() }
    }

    pub fn single(n: usize) -> Self {
        Self { assignment: vec![0; n], m: usize::from(n > 0) }
    }

    pub fn singletons(n: usize) -> Self {
        Self { assignment: (0..n).collect(), m: n }
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    #[inline]
    pub fn cluster_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Members of each cluster, in increasing node order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.m];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    /// Relabels so cluster ids follow the order of their smallest member.
    fn canonical(labels: &[usize]) -> Self {
        let mut map: BTreeMap<usize, usize> = BTreeMap::new();
        let mut assignment = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = map.len();
            assignment.push(*map.entry(l).or_insert(next));
        }
        Self { assignment, m: map.len() }
    }
}

/// Normalized spectral clustering: bottom `m` eigenvectors of the symmetric
/// normalized Laplacian `I - D^{-1/2} W D^{-1/2}`, rows normalized to unit
/// length, then k-means with [`KMEANS_RESTARTS`] seeded restarts.
pub fn spectral_cluster(g: &UserGraph, m: usize, seed: u64) -> Result<Partition> {
    let n = g.n();
    if m == 0 || m > n {
        return Err(Error::invalid(format!("cluster count {m} not in 1..={n}")));
    }
    if m == 1 {
        return Ok(Partition::single(n));
    }
    if m == n {
        return Ok(Partition::singletons(n));
    }
    let deg = g.degrees();
    let inv_sqrt_deg: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    let mut lsym = SymMatrix::identity(n);
    for (i, j, w) in g.edges() {
        lsym.set(i, j, -w * inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
    let eig = eigh(&lsym)?;
    let mut points: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|k| eig.vector(k)[i]).collect()).collect();
    for p in &mut points {
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            p.iter_mut().for_each(|v| *v /= norm);
        }
    }
    let labels = kmeans(&points, m, seed, KMEANS_RESTARTS);
    Ok(Partition::canonical(&labels))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding; keeps the restart with the
/// lowest inertia (first one on ties).
fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Vec<usize> {
    let mut rng = seeded(seed, Purpose::Clustering);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts {
        let mut centers = plus_plus_init(points, k, &mut rng);
        let mut labels = vec![usize::MAX; points.len()];
        for _ in 0..KMEANS_MAX_ITERS {
            let mut changed = false;
            for (p, label) in points.iter().zip(labels.iter_mut()) {
                let nearest = nearest(p, &centers).0;
                if nearest != *label {
                    *label = nearest;
                    changed = true;
                }
            }
            repair_empty(points, &mut labels, &centers, k);
            centers = centroids(points, &labels, k);
            if !changed {
                break;
            }
        }
        let inertia: f64 = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
        if best.as_ref().map_or(true, |(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.map(|(_, l)| l).unwrap_or_default()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.gen_range(0..points.len())
        };
        centers.push(points[pick].clone());
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

/// Gives every empty cluster the point farthest from its current center.
fn repair_empty(points: &[Vec<f64>], labels: &mut [usize], centers: &[Vec<f64>], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else { return };
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                let da = sq_dist(&points[a], &centers[labels[a]]);
                let db = sq_dist(&points[b], &centers[labels[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            });
        match far {
            Some(i) => labels[i] = empty,
            None => return,
        }
    }
}

fn centroids(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

fn check_partition(g: &UserGraph, p: &Partition) -> Result<()> {
    if p.n() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), actual: p.n() });
    }
    Ok(())
}

/// One node per cluster; the weight between two macro nodes is the total
/// weight of original edges crossing them (the edge count for unweighted
/// graphs). Returns the macro graph and the node-to-macro-node map.
pub fn macro_graph(g: &UserGraph, p: &Partition) -> Result<(UserGraph, Vec<usize>)> {
    check_partition(g, p)?;
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, j, w) in g.edges() {
        let (a, b) = (p.cluster_of(i), p.cluster_of(j));
        if a != b {
            *weights.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
        }
    }
    let macro_g = UserGraph::from_edges(p.m(), weights.into_iter().map(|((a, b), w)| (a, b, w)))?;
    Ok((macro_g, p.assignment().to_vec()))
}

/// `g` with every inter-cluster edge deleted.
pub fn block_graph(g: &UserGraph, p: &Partition) -> Result<UserGraph> {
    check_partition(g, p)?;
    UserGraph::from_edges(g.n(), g.edges().filter(|&(i, j, _)| p.cluster_of(i) == p.cluster_of(j)))
}

/// Reads `node<TAB>cluster` lines; every node in `0..n` must appear once.
/// Cluster labels are relabelled to `0..m` in increasing order.
pub fn read_partition_file(path: &Path, n: usize) -> Result<Partition> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = vec![None; n];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse(path, lineno + 1, msg);
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(err(format!("expected node<TAB>cluster, got {line:?}")));
        }
        let node: usize = fields[0].parse().map_err(|e| err(format!("bad node id: {e}")))?;
        let cluster: usize = fields[1].parse().map_err(|e| err(format!("bad cluster id: {e}")))?;
        let slot = labels.get_mut(node).ok_or_else(|| err(format!("node {node} out of range 0..{n}")))?;
        if slot.replace(cluster).is_some() {
            return Err(err(format!("node {node} assigned twice")));
        }
    }
    let labels: Vec<usize> = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::parse(path, 0, format!("node {i} has no cluster"))))
        .collect::<Result<_>>()?;
    Ok(Partition::from_labels(&labels))
}

pub fn write_partition_file(path: &Path, p: &Partition) -> Result<()> {
    let mut out = String::new();
    for (node, c) in p.assignment().iter().enumerate() {
        let _ = writeln!(out, "{node}\t{c}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
