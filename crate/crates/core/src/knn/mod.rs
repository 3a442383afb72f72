//! k-nearest-neighbour graphs built by OR-construction.
//!
//! Each point contributes directed edges to its `k` nearest neighbours; the
//! undirected graph keeps an edge whenever either direction is present.

mod descent;
mod exact;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ImdError, Result};

pub use descent::{knn_approx, NnDescentParams};
pub use exact::knn_exact;

/// How the kNN relation is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMode {
    Exact,
    Approx,
}

impl std::fmt::Display for KnnMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KnnMode::Exact => "exact",
            KnnMode::Approx => "approx",
        })
    }
}

/// Undirected kNN graph.
///
/// `edges` holds sorted unique pairs `(i, j)` with `i < j`. The directed
/// neighbour lists the graph was built from are kept in `neighbors`, `k`
/// entries per vertex ordered by increasing distance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnnGraph {
    n: usize,
    k: usize,
    neighbors: Vec<u32>,
    edges: Vec<(u32, u32)>,
}

impl KnnGraph {
    /// OR-construction from flat directed lists (`n * k` entries).
    pub(crate) fn from_directed(n: usize, k: usize, neighbors: Vec<u32>) -> Self {
        debug_assert_eq!(neighbors.len(), n * k);
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(n * k);
        for (i, row) in neighbors.chunks_exact(k.max(1)).enumerate() {
            let i = i as u32;
            for &j in row {
                debug_assert_ne!(i, j);
                edges.push((i.min(j), i.max(j)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Self {
            n,
            k,
            neighbors,
            edges,
        }
    }

    /// Graph from an explicit undirected edge list. Self-loops are dropped,
    /// duplicates merged. The directed lists are left empty.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(ImdError::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for {n} vertices"
                )));
            }
            if a != b {
                out.push((a.min(b) as u32, a.max(b) as u32));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(Self {
            n,
            k: 0,
            neighbors: Vec::new(),
            edges: out,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Directed neighbours of `i`, nearest first. Empty for graphs built from
    /// an edge list.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        if self.neighbors.is_empty() {
            &[]
        } else {
            &self.neighbors[i * self.k..(i + 1) * self.k]
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(a, b) in &self.edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        deg
    }

    /// Fraction of directed neighbour relations of `reference` also present
    /// in `self`.
    pub fn recall_against(&self, reference: &KnnGraph) -> f64 {
        assert_eq!(self.n, reference.n);
        assert_eq!(self.k, reference.k);
        let mut hit = 0usize;
        for i in 0..self.n {
            let mine = self.neighbors(i);
            hit += reference
                .neighbors(i)
                .iter()
                .filter(|j| mine.contains(j))
                .count();
        }
        hit as f64 / (self.n * self.k) as f64
    }

    /// Edge list as text, one `i j` pair per line in sorted order.
    pub fn edge_list_text(&self) -> String {
        let mut s = String::with_capacity(self.edges.len() * 12);
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "{a} {b}");
        }
        s
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| ImdError::io(path, e))?;
        f.write_all(self.edge_list_text().as_bytes())
            .map_err(|e| ImdError::io(path, e))
    }
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        Err(ImdError::InvalidK { k, n })
    } else {
        Ok(())
    }
}

/// Squared Euclidean distance. The summation order depends only on the
/// coordinates, so `sq_dist(a, b) == sq_dist(b, a)` bit for bit.
#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Bounded list of the `k` closest candidates, ordered by `(dist, index)`.
#[derive(Clone, Debug)]
pub(crate) struct TopK {
    k: usize,
    items: Vec<(f64, u32)>,
}

impl TopK {
    pub(crate) fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    pub(crate) fn worst(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].0
        }
    }

    /// Inserts if `(dist, idx)` beats the current worst. Returns whether the
    /// list changed. Duplicate indices are ignored.
    #[inline]
    pub(crate) fn push(&mut self, dist: f64, idx: u32) -> bool {
        let key = (dist, idx);
        if self.items.len() == self.k && !lex_less(key, self.items[self.k - 1]) {
            return false;
        }
        if self.items.iter().any(|&(_, j)| j == idx) {
            return false;
        }
        let pos = self.items.partition_point(|&it| lex_less(it, key));
        self.items.insert(pos, key);
        self.items.truncate(self.k);
        true
    }

    pub(crate) fn items(&self) -> &[(f64, u32)] {
        &self.items
    }
}

#[inline]
fn lex_less(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topk_breaks_ties_by_index() {
        let mut t = TopK::new(2);
        assert!(t.push(1.0, 5));
        assert!(t.push(1.0, 3));
        assert!(!t.push(1.0, 7));
        assert!(t.push(0.5, 9));
        assert_eq!(t.items(), &[(0.5, 9), (1.0, 3)]);
        assert!(!t.push(0.1, 9));
    }

    #[test]
    fn sq_dist_is_symmetric_bitwise() {
        let a: Vec<f64> = (0..13).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..13).map(|i| (i as f64 * 1.91).cos()).collect();
        assert_eq!(sq_dist(&a, &b).to_bits(), sq_dist(&b, &a).to_bits());
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        assert!((sq_dist(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn from_edges_normalizes_pairs() {
        let g = KnnGraph::from_edges(4, [(2, 1), (1, 2), (3, 3), (0, 3)]).unwrap();
        assert_eq!(g.edges(), &[(0, 3), (1, 2)]);
        assert!(KnnGraph::from_edges(2, [(0, 2)]).is_err());
    }

    #[test]
    fn edge_list_dump_is_sorted_pairs() {
        let g = KnnGraph::from_edges(3, [(2, 1), (0, 1)]).unwrap();
        assert_eq!(g.edge_list_text(), "0 1\n1 2\n");
    }
}
