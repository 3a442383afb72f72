use rayon::prelude::*;

use super::{check_k, sq_dist, KnnGraph, TopK};
use crate::error::Result;
use crate::pointcloud::PointCloud;

/// Queries handled together so each data row is streamed once per block.
const QUERY_BLOCK: usize = 32;

/// Exact kNN graph by brute force over all pairs.
///
/// Ties in distance go to the smaller point index. Parallel over blocks of
/// query points; the result does not depend on the thread count.
pub fn knn_exact(pc: &PointCloud, k: usize) -> Result<KnnGraph> {
    let n = pc.n();
    check_k(n, k)?;
    let blocks: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .step_by(QUERY_BLOCK)
        .map(|start| {
            let end = (start + QUERY_BLOCK).min(n);
            let mut tops: Vec<TopK> = (start..end).map(|_| TopK::new(k)).collect();
            for j in 0..n {
                let rj = pc.row(j);
                for (q, top) in (start..end).zip(tops.iter_mut()) {
                    if q == j {
                        continue;
                    }
                    let d = sq_dist(pc.row(q), rj);
                    // j is increasing, so an equal distance never displaces.
                    if d < top.worst() {
                        top.push(d, j as u32);
                    }
                }
            }
            tops.iter()
                .flat_map(|t| t.items().iter().map(|&(_, j)| j))
                .collect()
        })
        .collect();
    Ok(KnnGraph::from_directed(n, k, blocks.concat()))
}
