//! NN-descent approximate kNN construction.
//!
//! Starts from random neighbour lists and repeatedly compares
//! neighbours-of-neighbours (both forward and reverse lists, sampled at rate
//! `rho`). Candidate pairs are evaluated in parallel over fixed-size vertex
//! blocks and applied sequentially in vertex order, so the result depends on
//! the seed only.

use rayon::prelude::*;

use super::{check_k, knn_exact, sq_dist, KnnGraph};
use crate::error::{ImdError, Result};
use crate::pointcloud::PointCloud;
use crate::rng::{substream_seed, SplitMix64};

const JOIN_BLOCK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NnDescentParams {
    /// Sample rate for new and reverse candidates.
    pub rho: f64,
    pub max_iters: usize,
    /// Stop once an iteration updates fewer than `delta * n * k` entries.
    pub delta: f64,
}

impl Default for NnDescentParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iters: 10,
            delta: 0.001,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    dist: f64,
    idx: u32,
    new: bool,
}

/// Sorted neighbour list capped at `k`.
struct NeighborList {
    items: Vec<Entry>,
}

impl NeighborList {
    #[inline]
    fn worst(&self, k: usize) -> f64 {
        if self.items.len() < k {
            f64::INFINITY
        } else {
            self.items[k - 1].dist
        }
    }

    fn insert(&mut self, k: usize, dist: f64, idx: u32) -> bool {
        let beats = |e: &Entry| dist < e.dist || (dist == e.dist && idx < e.idx);
        if self.items.len() == k && !beats(&self.items[k - 1]) {
            return false;
        }
        if self.items.iter().any(|e| e.idx == idx) {
            return false;
        }
        let pos = self.items.iter().position(beats).unwrap_or(self.items.len());
        self.items.insert(
            pos,
            Entry {
                dist,
                idx,
                new: true,
            },
        );
        self.items.truncate(k);
        true
    }
}

/// Keeps a uniform random subset of at most `count` items, in place.
fn sample_in_place(v: &mut Vec<u32>, count: usize, rng: &mut SplitMix64) {
    if v.len() <= count {
        return;
    }
    for i in 0..count {
        let j = i + rng.below((v.len() - i) as u64) as usize;
        v.swap(i, j);
    }
    v.truncate(count);
}

/// Approximate kNN graph by NN-descent.
///
/// Falls back to [`knn_exact`] when `n <= k + 1`, where the only valid
/// answer is the complete graph.
pub fn knn_approx(pc: &PointCloud, k: usize, seed: u64, params: NnDescentParams) -> Result<KnnGraph> {
    let n = pc.n();
    check_k(n, k)?;
    if !(params.rho > 0.0 && params.rho <= 1.0) {
        return Err(ImdError::InvalidParameter(format!(
            "rho must lie in (0, 1], got {}",
            params.rho
        )));
    }
    if n <= k + 1 {
        return knn_exact(pc, k);
    }

    let mut lists: Vec<NeighborList> = (0..n)
        .map(|v| {
            let mut rng = SplitMix64::substream(seed, v as u64);
            let mut list = NeighborList {
                items: Vec::with_capacity(k + 1),
            };
            while list.items.len() < k {
                let u = rng.below(n as u64) as usize;
                if u != v {
                    list.insert(k, sq_dist(pc.row(v), pc.row(u)), u as u32);
                }
            }
            list
        })
        .collect();

    let sample = ((params.rho * k as f64).ceil() as usize).max(1);
    let threshold = params.delta * (n * k) as f64;

    for iter in 0..params.max_iters {
        let iter_seed = substream_seed(seed, n as u64 + iter as u64);

        // Forward candidates: all old entries plus a sample of new ones,
        // which are then marked old.
        let mut old: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut new: Vec<Vec<u32>> = vec![Vec::new(); n];
        for v in 0..n {
            let mut rng = SplitMix64::substream(iter_seed, v as u64);
            let mut fresh: Vec<u32> = Vec::new();
            for e in &lists[v].items {
                if e.new {
                    fresh.push(e.idx);
                } else {
                    old[v].push(e.idx);
                }
            }
            sample_in_place(&mut fresh, sample, &mut rng);
            for e in lists[v].items.iter_mut() {
                if fresh.contains(&e.idx) {
                    e.new = false;
                }
            }
            new[v] = fresh;
        }

        let mut rev_old: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut rev_new: Vec<Vec<u32>> = vec![Vec::new(); n];
        for v in 0..n {
            for &u in &old[v] {
                rev_old[u as usize].push(v as u32);
            }
            for &u in &new[v] {
                rev_new[u as usize].push(v as u32);
            }
        }
        for v in 0..n {
            let mut rng = SplitMix64::substream(iter_seed ^ 0x5555_5555_5555_5555, v as u64);
            sample_in_place(&mut rev_old[v], sample, &mut rng);
            sample_in_place(&mut rev_new[v], sample, &mut rng);
            old[v].extend_from_slice(&rev_old[v]);
            new[v].extend_from_slice(&rev_new[v]);
            old[v].sort_unstable();
            old[v].dedup();
            new[v].sort_unstable();
            new[v].dedup();
        }
        drop(rev_old);
        drop(rev_new);

        let mut updates = 0usize;
        for block_start in (0..n).step_by(JOIN_BLOCK) {
            let block_end = (block_start + JOIN_BLOCK).min(n);
            let proposals: Vec<Vec<(u32, u32, f64)>> = (block_start..block_end)
                .into_par_iter()
                .map(|v| {
                    let mut out = Vec::new();
                    let nv = &new[v];
                    let ov = &old[v];
                    let mut consider = |a: u32, b: u32| {
                        if a == b {
                            return;
                        }
                        let d = sq_dist(pc.row(a as usize), pc.row(b as usize));
                        if d <= lists[a as usize].worst(k) {
                            out.push((a, b, d));
                        }
                        if d <= lists[b as usize].worst(k) {
                            out.push((b, a, d));
                        }
                    };
                    for (i, &a) in nv.iter().enumerate() {
                        for &b in &nv[i + 1..] {
                            consider(a, b);
                        }
                        for &b in ov {
                            consider(a, b);
                        }
                    }
                    out
                })
                .collect();
            for block in proposals {
                for (target, source, d) in block {
                    if lists[target as usize].insert(k, d, source) {
                        updates += 1;
                    }
                }
            }
        }
        log::debug!("nn-descent iteration {iter}: {updates} updates");
        if (updates as f64) < threshold {
            break;
        }
    }

    let mut neighbors = Vec::with_capacity(n * k);
    for list in &lists {
        neighbors.extend(list.items.iter().map(|e| e.idx));
    }
    Ok(KnnGraph::from_directed(n, k, neighbors))
}
