//! User graphs, their Laplacians, and the derived sharing transform.
//!
//! Graphs are undirected with positive edge weights (1 for plain social
//! links; inter-cluster edge counts for macro graphs). The Laplacian uses
//! weighted degrees on the diagonal and `-w(i, j)` off the diagonal.

mod cluster;
mod generate;
mod transform;

pub use cluster::{
    block_graph, macro_graph, read_partition_file, spectral_cluster, write_partition_file,
    Partition, KMEANS_RESTARTS,
};
pub use generate::{inject_graph_noise, make_4cliques, noise_threshold, NoiseReport};
pub use transform::{compound, SharingTransform};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Undirected graph over nodes `0..n`. Each edge is stored once as `(i, j)`
/// with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserGraph {
    n: usize,
    edges: BTreeMap<(usize, usize), f64>,
}

impl UserGraph {
    /// Edgeless graph.
    pub fn new(n: usize) -> Self {
        Self { n, edges: BTreeMap::new() }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut g = Self::new(n);
        for (i, j, w) in edges {
            g.insert_edge(i, j, w)?;
        }
        Ok(g)
    }

    pub fn from_unweighted(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_edges(n, edges.into_iter().map(|(i, j)| (i, j, 1.0)))
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::new(n);
        for i in 0..n {
            for j in i + 1..n {
                g.edges.insert((i, j), 1.0);
            }
        }
        g
    }

    /// Adds or overwrites the edge `{i, j}`.
    pub fn insert_edge(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(Error::invalid(format!("self-loop at node {i}")));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::invalid(format!("edge ({i}, {j}) has non-positive weight {w}")));
        }
        self.edges.insert(key(i, j), w);
        Ok(())
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Option<f64> {
        self.edges.remove(&key(i, j))
    }

    /// Flips presence of an unweighted edge. Returns whether it now exists.
    pub(crate) fn toggle_edge(&mut self, i: usize, j: usize) -> bool {
        let k = key(i, j);
        if self.edges.remove(&k).is_some() {
            false
        } else {
            self.edges.insert(k, 1.0);
            true
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j, w)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.edges.get(&key(i, j)).copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains_key(&key(i, j))
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    pub fn is_unweighted(&self) -> bool {
        self.edges.values().all(|&w| w == 1.0)
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (i, j, w) in self.edges() {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        adj
    }

    /// Weighted degrees.
    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for (i, j, w) in self.edges() {
            deg[i] += w;
            deg[j] += w;
        }
        deg
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; self.n];
        let mut comps = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = vec![start];
            label[start] = id;
            let mut head = 0;
            while head < members.len() {
                let u = members[head];
                head += 1;
                for &(v, _) in &adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        members.push(v);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().len() == 1
    }

    /// Subgraph induced by `nodes`, relabelled `0..nodes.len()` in the given
    /// order.
    pub fn induced(&self, nodes: &[usize]) -> Result<UserGraph> {
        let mut local = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            self.check_node(v)?;
            local[v] = k;
        }
        let mut g = UserGraph::new(nodes.len());
        for (i, j, w) in self.edges() {
            if local[i] != usize::MAX && local[j] != usize::MAX {
                g.edges.insert(key(local[i], local[j]), w);
            }
        }
        Ok(g)
    }

    /// `L[i][i] = Σ_j w(i, j)`, `L[i][j] = -w(i, j)`.
    pub fn laplacian(&self) -> SymMatrix {
        let mut l = SymMatrix::zeros(self.n);
        let deg = self.degrees();
        for (i, d) in deg.iter().enumerate() {
            l.set(i, i, *d);
        }
        for (i, j, w) in self.edges() {
            l.set(i, j, -w);
        }
        l
    }

    /// Parses the text graph format: a `nodes <n>` header, then one
    /// `i<TAB>j[<TAB>weight]` line per edge. `#` starts a comment.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut graph: Option<UserGraph> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::parse(origin, lineno + 1, msg);
            if graph.is_none() {
                let mut parts = line.split_whitespace();
                let (Some("nodes"), Some(n), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(format!("expected `nodes <n>` header, got {line:?}")));
                };
                let n = n.parse().map_err(|e| err(format!("bad node count: {e}")))?;
                graph = Some(UserGraph::new(n));
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(err(format!("expected 2 or 3 tab-separated fields, got {}", fields.len())));
            }
            let i: usize = fields[0].parse().map_err(|e| err(format!("bad node id: {e}")))?;
            let j: usize = fields[1].parse().map_err(|e| err(format!("bad node id: {e}")))?;
            let w: f64 = match fields.get(2) {
                Some(s) => s.parse().map_err(|e| err(format!("bad weight: {e}")))?,
                None => 1.0,
            };
            let g = graph.as_mut().expect("header parsed");
            if let Some(old) = g.weight(i, j) {
                if old != w {
                    return Err(err(format!("edge ({i}, {j}) listed twice with different weights")));
                }
            }
            g.insert_edge(i, j, w).map_err(|e| err(e.to_string()))?;
        }
        graph.ok_or_else(|| Error::parse(origin, 0, "missing `nodes <n>` header"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("nodes {}\n", self.n);
        for (i, j, w) in self.edges() {
            if w == 1.0 {
                let _ = writeln!(out, "{i}\t{j}");
            } else {
                let _ = writeln!(out, "{i}\t{j}\t{w}");
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::OutOfRange { what: "nodes", index: i, len: self.n });
        }
        Ok(())
    }
}

#[inline]
fn key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;

    #[test]
    fn laplacian_examples() {
        let g = UserGraph::from_unweighted(2, [(0, 1)]).unwrap();
        assert_eq!(g.laplacian().row(0), &[1.0, -1.0]);
        assert_eq!(g.laplacian().row(1), &[-1.0, 1.0]);

        let tri = UserGraph::complete(3);
        let l = tri.laplacian();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.get(i, j), if i == j { 2.0 } else { -1.0 });
            }
        }

        let path = UserGraph::from_unweighted(3, [(0, 1), (1, 2)]).unwrap();
        let l = path.laplacian();
        assert_eq!(l.row(0), &[1.0, -1.0, 0.0]);
        assert_eq!(l.row(1), &[-1.0, 2.0, -1.0]);
        assert_eq!(l.row(2), &[0.0, -1.0, 1.0]);
    }

    #[test]
    fn weighted_laplacian_is_psd_with_zero_row_sums() {
        let g = UserGraph::from_edges(4, [(0, 1, 2.0), (1, 2, 0.5), (0, 3, 3.0)]).unwrap();
        let l = g.laplacian();
        for i in 0..4 {
            assert!(l.row(i).iter().sum::<f64>().abs() < 1e-15);
        }
        assert_eq!(l.get(0, 0), 5.0);
        let eig = eigh(&l).unwrap();
        assert!(eig.values[0] >= -1e-10);
    }

    #[test]
    fn rejects_invalid_edges() {
        let mut g = UserGraph::new(3);
        assert!(g.insert_edge(1, 1, 1.0).is_err());
        assert!(g.insert_edge(0, 1, 0.0).is_err());
        assert!(g.insert_edge(0, 3, 1.0).is_err());
        g.insert_edge(2, 0, 1.0).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 2, 1.0)]);
    }

    #[test]
    fn components_and_induced() {
        let g = UserGraph::from_unweighted(5, [(0, 1), (3, 4)]).unwrap();
        assert_eq!(g.components(), vec![vec![0, 1], vec![2], vec![3, 4]]);
        assert!(!g.is_connected());
        let sub = g.induced(&[4, 3, 0]).unwrap();
        assert_eq!(sub.edges().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);
    }

    #[test]
    fn text_round_trip() {
        let g = UserGraph::from_edges(4, [(0, 1, 1.0), (2, 3, 2.5)]).unwrap();
        let text = g.to_text();
        assert_eq!(text, "nodes 4\n0\t1\n2\t3\t2.5\n");
        let back = UserGraph::parse(&format!("# comment\n{text}"), Path::new("mem")).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = UserGraph::parse("nodes 3\n0\t1\n0\tx\n", Path::new("g.tsv")).unwrap_err();
        assert!(err.to_string().starts_with("g.tsv:3:"), "{err}");
        assert!(UserGraph::parse("0\t1\n", Path::new("g")).is_err());
        assert!(UserGraph::parse("nodes 2\n0\t0\n", Path::new("g")).is_err());
    }
}
