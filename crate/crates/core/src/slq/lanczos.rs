use crate::error::{ImdError, Result};
use crate::laplacian::SymmetricOperator;

/// Tolerance on the start vector norm.
pub const UNIT_TOL: f64 = 1e-12;
/// Off-diagonal magnitude below which the Krylov space is treated as
/// invariant and the iteration stops.
pub const BREAKDOWN_TOL: f64 = 1e-12;

/// Symmetric tridiagonal matrix: `diag` has length `m`, `offdiag` `m - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        assert!(!diag.is_empty() && offdiag.len() + 1 == diag.len());
        Self { diag, offdiag }
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let m = self.size();
        let mut t = nalgebra::DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.diag[i];
            if i + 1 < m {
                t[(i, i + 1)] = self.offdiag[i];
                t[(i + 1, i)] = self.offdiag[i];
            }
        }
        t
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub tridiagonal: Tridiagonal,
    /// Orthonormal Krylov basis `q_0..q_{m'-1}` when requested.
    pub basis: Option<Vec<Vec<f64>>>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `m`-step Lanczos tridiagonalization with full reorthogonalization.
///
/// Stops early when the next off-diagonal falls below [`BREAKDOWN_TOL`]; the
/// returned `T` then has the size of the invariant subspace reached.
pub fn lanczos<A: SymmetricOperator + ?Sized>(
    op: &A,
    v0: &[f64],
    m: usize,
    keep_basis: bool,
) -> Result<LanczosResult> {
    let n = op.dim();
    assert_eq!(v0.len(), n, "start vector length");
    if m == 0 || m > n {
        return Err(ImdError::InvalidParameter(format!(
            "Lanczos steps must satisfy 1 <= m <= n ({n}), got {m}"
        )));
    }
    let norm = dot(v0, v0).sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(ImdError::NonUnitStartVector { norm });
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    basis.push(v0.to_vec());
    let mut diag = Vec::with_capacity(m);
    let mut offdiag: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![0.0; n];

    for j in 0..m {
        op.apply(&basis[j], &mut w);
        let alpha = dot(&w, &basis[j]);
        diag.push(alpha);
        if j + 1 == m {
            break;
        }
        axpy(-alpha, &basis[j], &mut w);
        if j > 0 {
            axpy(-offdiag[j - 1], &basis[j - 1], &mut w);
        }
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                axpy(-c, q, &mut w);
            }
        }
        let beta = dot(&w, &w).sqrt();
        if beta < BREAKDOWN_TOL {
            break;
        }
        offdiag.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }

    Ok(LanczosResult {
        tridiagonal: Tridiagonal { diag, offdiag },
        basis: keep_basis.then_some(basis),
    })
}
