//! Symmetric normalized graph Laplacian `L = I - D^{-1/2} A D^{-1/2}`.

use nalgebra::DMatrix;

use crate::knn::KnnGraph;

/// A symmetric linear operator that can be applied to vectors.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Normalized Laplacian in CSR form with both triangles stored.
///
/// Entry `(i, j)` and `(j, i)` are produced by the same expression, so the
/// stored matrix is exactly symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseLaplacian {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    component_count: usize,
    isolated_count: usize,
}

impl SparseLaplacian {
    pub fn from_graph(g: &KnnGraph) -> Self {
        let n = g.n();
        let deg = g.degrees();
        let inv_sqrt: Vec<f64> = deg
            .iter()
            .map(|&d| if d > 0 { 1.0 / (d as f64).sqrt() } else { 0.0 })
            .collect();

        let mut adj: Vec<Vec<u32>> = deg.iter().map(|&d| Vec::with_capacity(d + 1)).collect();
        for &(a, b) in g.edges() {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }

        let nnz = n + 2 * g.edges().len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (i, row) in adj.iter_mut().enumerate() {
            row.push(i as u32);
            row.sort_unstable();
            for &j in row.iter() {
                let j_us = j as usize;
                col_idx.push(j);
                values.push(if j_us == i {
                    if deg[i] > 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    -(inv_sqrt[i] * inv_sqrt[j_us])
                });
            }
            row_ptr.push(col_idx.len());
        }

        Self {
            n,
            row_ptr,
            col_idx,
            values,
            component_count: count_components(n, g.edges()),
            isolated_count: deg.iter().filter(|&&d| d == 0).count(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Connected components, isolated vertices included.
    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn isolated_count(&self) -> usize {
        self.isolated_count
    }

    /// Stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .zip(&self.values[r])
            .map(|(&j, &v)| (j as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// `tr(L)`, which equals `n` minus the isolated vertex count.
    pub fn trace(&self) -> f64 {
        (self.n - self.isolated_count) as f64
    }

    /// Squared Frobenius norm from the stored entries.
    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

impl SymmetricOperator for SparseLaplacian {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut acc = 0.0;
            for (&j, &v) in self.col_idx[r.clone()].iter().zip(&self.values[r]) {
                acc += v * x[j as usize];
            }
            *yi = acc;
        }
    }
}

/// Builds the Laplacian of `g`.
pub fn laplacian(g: &KnnGraph) -> SparseLaplacian {
    SparseLaplacian::from_graph(g)
}

fn count_components(n: usize, edges: &[(u32, u32)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut count = n;
    for &(a, b) in edges {
        let ra = find(&mut parent, a as usize);
        let rb = find(&mut parent, b as usize);
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            count -= 1;
        }
    }
    count
}
