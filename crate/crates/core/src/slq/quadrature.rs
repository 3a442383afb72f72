//! Gauss quadrature rules from Jacobi (symmetric tridiagonal) matrices.
//!
//! The nodes are the eigenvalues of `T` and the weights the squared first
//! components of its normalized eigenvectors. Eigenvalues come from the
//! implicit QL iteration with Wilkinson shifts; only the rows of the
//! eigenvector matrix that are asked for are accumulated.

use super::lanczos::Tridiagonal;

/// Nodes in ascending order with their weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// `sum_k w_k f(theta_k)`.
    #[inline]
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Eigen-decomposition of a symmetric tridiagonal matrix.
///
/// `vectors` is row-major `rows x m`: with `rows == 1` it holds the first
/// row of the eigenvector matrix only, with `rows == m` the full matrix.
/// Column `k` belongs to `values[k]`; values are ascending.
#[derive(Clone, Debug)]
pub struct TridiagonalEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub rows: usize,
}

const MAX_SWEEPS_PER_VALUE: usize = 60;

/// Implicit QL on `t`, tracking `rows` leading rows of the eigenvector
/// matrix (1 or `t.size()`).
pub fn tridiagonal_eigen(t: &Tridiagonal, rows: usize) -> TridiagonalEigen {
    let m = t.size();
    assert!(rows == 1 || rows == m);
    let mut d = t.diag.clone();
    let mut e = t.offdiag.clone();
    e.push(0.0);
    let mut z = vec![0.0; rows * m];
    for r in 0..rows {
        z[r * m + r] = 1.0;
    }

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..m {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut mm = l;
        while mm < m - 1 && e[mm].abs() > eps * tst1 {
            mm += 1;
        }
        if mm > l {
            for _ in 0..MAX_SWEEPS_PER_VALUE {
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[mm];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..mm).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in z.chunks_exact_mut(m) {
                        let h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![0.0; rows * m];
    for r in 0..rows {
        for (dst, &src) in order.iter().enumerate() {
            vectors[r * m + dst] = z[r * m + src];
        }
    }
    TridiagonalEigen {
        values,
        vectors,
        rows,
    }
}

/// Gauss quadrature rule of the Jacobi matrix `t`.
pub fn quadrature_from_tridiagonal(t: &Tridiagonal) -> Quadrature {
    let eig = tridiagonal_eigen(t, 1);
    let weights = eig.vectors.iter().map(|u| u * u).collect();
    Quadrature {
        nodes: eig.values,
        weights,
    }
}
