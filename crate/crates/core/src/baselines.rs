//! FID and KID on raw feature matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{ImdError, Result};
use crate::pointcloud::PointCloud;

/// Mean and sample covariance (`1/(n-1)` normalization).
#[derive(Clone, Debug)]
pub struct GaussianSummary {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianSummary {
    pub fn from_pointcloud(pc: &PointCloud) -> Result<Self> {
        let (n, d) = (pc.n(), pc.d());
        if n < 2 {
            return Err(ImdError::TooFewSamples { needed: 2, got: n });
        }
        let mut mean = DVector::zeros(d);
        for row in pc.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(d, d);
        let mut centered = vec![0.0; d];
        for row in pc.rows() {
            for ((c, x), m) in centered.iter_mut().zip(row).zip(mean.iter()) {
                *c = x - m;
            }
            for i in 0..d {
                for j in i..d {
                    cov[(i, j)] += centered[i] * centered[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = cov[(i, j)] / (n - 1) as f64;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Ok(Self { mean, cov })
    }
}

/// Symmetric PSD square root with negative eigenvalues clamped to zero.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let roots = e.eigenvalues.map(|v| v.max(0.0).sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&roots) * e.eigenvectors.transpose()
}

fn check_dims(x: &PointCloud, y: &PointCloud) -> Result<()> {
    if x.d() != y.d() {
        return Err(ImdError::DimensionMismatch(x.d(), y.d()));
    }
    for pc in [x, y] {
        if pc.n() < 2 {
            return Err(ImdError::TooFewSamples { needed: 2, got: pc.n() });
        }
    }
    Ok(())
}

/// Frechet distance between the Gaussian fits of `a` and `b`.
///
/// The cross term `tr((S_a S_b)^{1/2})` is the sum of square roots of the
/// eigenvalues of the symmetric matrix `S_a^{1/2} S_b S_a^{1/2}`.
pub fn fid_from_summaries(a: &GaussianSummary, b: &GaussianSummary) -> f64 {
    let diff = &a.mean - &b.mean;
    let root_a = psd_sqrt(&a.cov);
    let inner = &root_a * &b.cov * &root_a;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    diff.norm_squared() + a.cov.trace() + b.cov.trace() - 2.0 * cross
}

pub fn fid(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check_dims(x, y)?;
    Ok(fid_from_summaries(
        &GaussianSummary::from_pointcloud(x)?,
        &GaussianSummary::from_pointcloud(y)?,
    ))
}

/// `(x.y / d + 1)^3`.
#[inline]
pub fn polynomial_kernel(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let base = dot / x.len() as f64 + 1.0;
    base * base * base
}

/// Sum of kernel values per row of `a` against all of `b`, skipping the
/// diagonal when `a` and `b` are the same set. Rows are summed in order.
fn kernel_sum(a: &PointCloud, b: &PointCloud, skip_diagonal: bool) -> f64 {
    let per_row: Vec<f64> = (0..a.n())
        .into_par_iter()
        .map(|i| {
            let ri = a.row(i);
            let mut s = 0.0;
            for j in 0..b.n() {
                if skip_diagonal && i == j {
                    continue;
                }
                s += polynomial_kernel(ri, b.row(j));
            }
            s
        })
        .collect();
    per_row.iter().sum()
}

/// Unbiased squared MMD with the cubic polynomial kernel, on the full
/// sample.
pub fn kid(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check_dims(x, y)?;
    let (m, n) = (x.n() as f64, y.n() as f64);
    let kxx = kernel_sum(x, x, true) / (m * (m - 1.0));
    let kyy = kernel_sum(y, y, true) / (n * (n - 1.0));
    let kxy = kernel_sum(x, y, false) / (m * n);
    Ok(kxx + kyy - 2.0 * kxy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn gaussian(n: usize, d: usize, seed: u64, shift: f64) -> PointCloud {
        let mut rng = SplitMix64::new(seed);
        PointCloud::new(n, d, (0..n * d).map(|_| rng.gaussian() + shift).collect()).unwrap()
    }

    #[test]
    fn fid_of_identical_sets_is_zero() {
        let x = gaussian(200, 4, 1, 0.0);
        assert!(fid(&x, &x).unwrap().abs() < 1e-8);
    }

    #[test]
    fn fid_one_dimensional_closed_form() {
        // Means 0 and 1, both sample variances 1.
        let x = PointCloud::new(3, 1, vec![-1.0, 0.0, 1.0]).unwrap();
        let y = PointCloud::new(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        assert!((fid(&x, &y).unwrap() - 1.0).abs() < 1e-8);
        // Different variances: (mu1-mu2)^2 + (s1-s2)^2.
        let z = PointCloud::new(3, 1, vec![-2.0, 0.0, 2.0]).unwrap();
        assert!((fid(&x, &z).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fid_symmetric_and_rotation_invariant() {
        let x = gaussian(300, 3, 2, 0.0);
        let y = gaussian(300, 3, 3, 0.3);
        let f = fid(&x, &y).unwrap();
        assert!((f - fid(&y, &x).unwrap()).abs() < 1e-10);
        let (c, s) = (0.6f64, 0.8f64);
        let rot = |r: &[f64], o: &mut [f64]| {
            o[0] = c * r[0] - s * r[1];
            o[1] = s * r[0] + c * r[1];
            o[2] = r[2];
        };
        let xr = x.map_rows(3, rot).unwrap();
        let yr = y.map_rows(3, rot).unwrap();
        assert!((fid(&xr, &yr).unwrap() - f).abs() < 1e-6);
    }

    #[test]
    fn dimension_mismatch() {
        let x = gaussian(5, 2, 1, 0.0);
        let y = gaussian(5, 3, 1, 0.0);
        assert!(matches!(fid(&x, &y), Err(ImdError::DimensionMismatch(2, 3))));
        assert!(matches!(kid(&x, &y), Err(ImdError::DimensionMismatch(2, 3))));
    }

    #[test]
    fn kid_requires_two_samples() {
        let x = PointCloud::new(1, 1, vec![0.0]).unwrap();
        let y = PointCloud::new(1, 1, vec![2.0]).unwrap();
        assert!(matches!(kid(&x, &y), Err(ImdError::TooFewSamples { .. })));
    }

    /// Direct evaluation of every kernel pair.
    fn kid_brute_force(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
        let k = |a: &[f64], b: &[f64]| {
            let d = a.len() as f64;
            (a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>() / d + 1.0).powi(3)
        };
        let (m, n) = (x.len(), y.len());
        let mut sxx = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    sxx += k(&x[i], &x[j]);
                }
            }
        }
        let mut syy = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    syy += k(&y[i], &y[j]);
                }
            }
        }
        let mut sxy = 0.0;
        for a in x {
            for b in y {
                sxy += k(a, b);
            }
        }
        sxx / (m * (m - 1)) as f64 + syy / (n * (n - 1)) as f64 - 2.0 * sxy / (m * n) as f64
    }

    #[test]
    fn kid_hand_case() {
        let x = PointCloud::new(2, 1, vec![0.0, 1.0]).unwrap();
        let y = PointCloud::new(2, 1, vec![1.0, 2.0]).unwrap();
        let want = kid_brute_force(&[vec![0.0], vec![1.0]], &[vec![1.0], vec![2.0]]);
        assert_eq!(want, 9.5);
        assert_eq!(kid(&x, &y).unwrap(), want);
    }

    #[test]
    fn kid_matches_brute_force_and_is_symmetric() {
        let x = gaussian(40, 3, 5, 0.0);
        let y = gaussian(30, 3, 6, 0.2);
        let rows = |p: &PointCloud| p.rows().map(|r| r.to_vec()).collect::<Vec<_>>();
        let want = kid_brute_force(&rows(&x), &rows(&y));
        let got = kid(&x, &y).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        assert!((got - kid(&y, &x).unwrap()).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn kid_is_unbiased_under_the_null() {
        let vals: Vec<f64> = (0..100)
            .map(|t| {
                let x = gaussian(50, 2, 1000 + 2 * t, 0.0);
                let y = gaussian(50, 2, 1001 + 2 * t, 0.0);
                kid(&x, &y).unwrap()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / 100.0;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
        assert!(mean.abs() <= 3.0 * sd / 10.0, "mean {mean} sd {sd}");
    }
}
