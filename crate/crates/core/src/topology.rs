//! Undirected, connected communication graphs.
//!
//! Node ids are 0-indexed. The edge-list text format is:
//!
//! ```text
//! n 5
//! # comment
//! 0 1
//! 3 2
//! ```
//!
//! The first non-comment line declares the node count; every other
//! non-empty line that does not start with `#` is an undirected edge
//! `u v` with `u != v` and both ids below `n`. Repeated edges are ignored.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::rng::rng_from_seed;

/// Resampling budget for [`Graph::erdos_renyi`].
pub const ER_MAX_ATTEMPTS: usize = 1000;

/// A connected undirected graph without self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

/// Node degrees, indexed by node id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeProfile {
    pub degrees: Vec<usize>,
}

impl DegreeProfile {
    pub fn max(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> usize {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    /// `(degree, count)` pairs in increasing degree order.
    pub fn histogram(&self) -> Vec<(usize, usize)> {
        let mut counts = vec![0usize; self.max() + 1];
        for &d in &self.degrees {
            counts[d] += 1;
        }
        counts.into_iter().enumerate().filter(|&(_, c)| c > 0).collect()
    }
}

impl Graph {
    /// Validates a symmetric, loop-free, connected adjacency matrix.
    pub fn from_adjacency(n: usize, adjacency: Vec<bool>) -> Result<Self> {
        if adjacency.len() != n * n {
            return Err(Error::dimension(n * n, adjacency.len()));
        }
        if n == 0 {
            return Err(Error::InvalidSize { n, reason: "graph needs at least one node" });
        }
        for i in 0..n {
            if adjacency[i * n + i] {
                return Err(Error::Validation(format!("self-loop at node {i}")));
            }
            for j in 0..i {
                if adjacency[i * n + j] != adjacency[j * n + i] {
                    return Err(Error::Validation(format!("adjacency not symmetric at ({i}, {j})")));
                }
            }
        }
        let g = Self::from_adjacency_unchecked(n, adjacency);
        if !g.is_connected() {
            return Err(Error::Validation("graph is not connected".into()));
        }
        Ok(g)
    }

    fn from_adjacency_unchecked(n: usize, adjacency: Vec<bool>) -> Self {
        let neighbors = (0..n).map(|i| (0..n).filter(|&j| adjacency[i * n + j]).collect()).collect();
        Self { n, adjacency, neighbors }
    }

    fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adjacency = vec![false; n * n];
        for (u, v) in edges {
            adjacency[u * n + v] = true;
            adjacency[v * n + u] = true;
        }
        Self::from_adjacency_unchecked(n, adjacency)
    }

    /// Cycle on `n >= 3` nodes.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidSize { n, reason: "ring needs n >= 3" });
        }
        Ok(Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))))
    }

    /// Complete graph on `n >= 2` nodes.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize { n, reason: "complete graph needs n >= 2" });
        }
        Ok(Self::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))))
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize { n, reason: "path needs n >= 2" });
        }
        Ok(Self::from_edges(n, (0..n - 1).map(|i| (i, i + 1))))
    }

    /// Star with hub 0.
    pub fn star(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize { n, reason: "star needs n >= 2" });
        }
        Ok(Self::from_edges(n, (1..n).map(|i| (0, i))))
    }

    /// G(n, p) conditioned on connectivity.
    ///
    /// Pairs `(i, j)`, `i < j`, are visited in lexicographic order and each is
    /// kept with probability `edge_prob`. Disconnected draws are discarded and
    /// the whole graph redrawn from the same stream, up to
    /// [`ER_MAX_ATTEMPTS`] times.
    pub fn erdos_renyi(n: usize, edge_prob: f64, seed: u64) -> Result<Self> {
        Ok(Self::erdos_renyi_with_attempts(n, edge_prob, seed)?.0)
    }

    /// Like [`Graph::erdos_renyi`], also returning how many draws were needed.
    pub fn erdos_renyi_with_attempts(n: usize, edge_prob: f64, seed: u64) -> Result<(Self, usize)> {
        if n < 2 {
            return Err(Error::InvalidSize { n, reason: "Erdos-Renyi graph needs n >= 2" });
        }
        if !(edge_prob > 0.0 && edge_prob <= 1.0) {
            return Err(Error::Domain(format!("edge_prob must lie in (0, 1], got {edge_prob}")));
        }
        let mut rng = rng_from_seed(seed);
        for attempt in 1..=ER_MAX_ATTEMPTS {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < edge_prob {
                        edges.push((i, j));
                    }
                }
            }
            let g = Self::from_edges(n, edges);
            if g.is_connected() {
                return Ok((g, attempt));
            }
        }
        Err(Error::Generation { n, edge_prob, attempts: ER_MAX_ATTEMPTS })
    }

    /// Parses the edge-list format described in the module docs.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_id = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse { line: line_no, message: format!("expected a node id, got `{s}`") })
            };
            match n {
                None => {
                    if fields.len() != 2 || fields[0] != "n" {
                        return Err(Error::Parse { line: line_no, message: "first line must be `n <count>`".into() });
                    }
                    let count = parse_id(fields[1])?;
                    if count == 0 {
                        return Err(Error::Parse { line: line_no, message: "node count must be positive".into() });
                    }
                    n = Some(count);
                }
                Some(count) => {
                    if fields.len() != 2 {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("expected `<u> <v>`, got `{line}`"),
                        });
                    }
                    let (u, v) = (parse_id(fields[0])?, parse_id(fields[1])?);
                    if u >= count || v >= count {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("node id out of range 0..{count}"),
                        });
                    }
                    if u == v {
                        return Err(Error::Validation(format!("self-loop {u} {v} on line {line_no}")));
                    }
                    edges.push((u, v));
                }
            }
        }
        let n = n.ok_or_else(|| Error::Parse { line: 1, message: "missing `n <count>` header".into() })?;
        let g = Self::from_edges(n, edges);
        if !g.is_connected() {
            return Err(Error::Validation("graph is not connected".into()));
        }
        Ok(g)
    }

    /// Canonical edge list: header, then edges `u v` with `u < v` in lexicographic order.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> DegreeProfile {
        DegreeProfile { degrees: (0..self.n).map(|i| self.degree(i)).collect() }
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().max()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors[u].iter().copied().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    pub fn adjacency_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    /// `L = D - A`.
    pub fn laplacian(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| {
            if i == j {
                self.degree(i) as f64
            } else if self.has_edge(i, j) {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// Laplacian eigenvalues in increasing order.
    pub fn laplacian_spectrum(&self) -> Result<Vec<f64>> {
        let mut ev: Vec<f64> = linalg::eigenvalues(&self.laplacian())?.into_iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Second-smallest Laplacian eigenvalue; zero for a single node.
    pub fn algebraic_connectivity(&self) -> Result<f64> {
        Ok(self.laplacian_spectrum()?.get(1).copied().unwrap_or(0.0))
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }
}
