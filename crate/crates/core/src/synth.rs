//! Deterministic synthetic datasets.

use nalgebra::{Cholesky, DMatrix, Matrix2, Matrix4, Vector2, Vector4};

use crate::error::{ImdError, Result};
use crate::pointcloud::PointCloud;
use crate::rng::SplitMix64;

pub const TORUS_MAJOR: f64 = 2.0;
pub const TORUS_MINOR: f64 = 0.5;
pub const HOLE_FRACTION: f64 = 0.05;

/// Standard normal samples in `d` dimensions.
pub fn blob(n: usize, d: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = SplitMix64::new(seed);
    let mut data = vec![0.0; n * d];
    rng.fill_gaussian(&mut data);
    PointCloud::new(n, d, data)
}

/// Uniform samples in the unit cube `[0, 1)^d`.
pub fn uniform(n: usize, d: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = SplitMix64::new(seed);
    PointCloud::new(n, d, (0..n * d).map(|_| rng.next_f64()).collect())
}

/// `count` unit-variance Gaussian clusters; centers are standard normal
/// vectors scaled by `separation`. Point `i` belongs to cluster `i % count`.
pub fn clusters(n: usize, d: usize, count: usize, separation: f64, seed: u64) -> Result<PointCloud> {
    if count == 0 {
        return Err(ImdError::InvalidParameter("cluster count must be positive".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut centers = vec![0.0; count * d];
    rng.fill_gaussian(&mut centers);
    centers.iter_mut().for_each(|c| *c *= separation);
    let mut data = vec![0.0; n * d];
    rng.fill_gaussian(&mut data);
    for (i, row) in data.chunks_exact_mut(d).enumerate() {
        let c = &centers[(i % count) * d..(i % count + 1) * d];
        for (x, m) in row.iter_mut().zip(c) {
            *x += m;
        }
    }
    PointCloud::new(n, d, data)
}

fn torus_point(rng: &mut SplitMix64, major: f64, minor: f64) -> [f64; 3] {
    // Rejection on the tube angle makes the samples uniform in surface area.
    loop {
        let theta = std::f64::consts::TAU * rng.next_f64();
        let accept = (major + minor * theta.cos()) / (major + minor);
        if rng.next_f64() < accept {
            let phi = std::f64::consts::TAU * rng.next_f64();
            let rho = major + minor * theta.cos();
            return [rho * phi.cos(), rho * phi.sin(), minor * theta.sin()];
        }
    }
}

/// Uniform samples on the surface of a torus in R^3 (major radius 2, minor
/// radius 0.5).
pub fn torus(n: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = SplitMix64::new(seed);
    let data = (0..n)
        .flat_map(|_| torus_point(&mut rng, TORUS_MAJOR, TORUS_MINOR))
        .collect();
    PointCloud::new(n, 3, data)
}

/// A torus where a fraction `fill` of the `n` points lies inside the hole:
/// uniform on the disk of radius `0.8 * (R - r)` in the plane `z = 0`.
pub fn torus_holefill(n: usize, fill: f64, seed: u64) -> Result<PointCloud> {
    if !(0.0..=1.0).contains(&fill) {
        return Err(ImdError::InvalidParameter(format!("fill fraction {fill} outside [0, 1]")));
    }
    let inside = (fill * n as f64).round() as usize;
    let mut rng = SplitMix64::new(seed);
    let radius = 0.8 * (TORUS_MAJOR - TORUS_MINOR);
    let mut data = Vec::with_capacity(3 * n);
    for i in 0..n {
        if i < n - inside {
            data.extend(torus_point(&mut rng, TORUS_MAJOR, TORUS_MINOR));
        } else {
            let r = radius * rng.next_f64().sqrt();
            let phi = std::f64::consts::TAU * rng.next_f64();
            data.extend([r * phi.cos(), r * phi.sin(), 0.0]);
        }
    }
    PointCloud::new(n, 3, data)
}

/// Mean, covariance and third central moments of a 2-D cloud.
///
/// The third moments are ordered `[E x^3, E x^2 y, E x y^2, E y^3]` over
/// centered coordinates with a `1/n` normalization; the covariance uses
/// `1/(n-1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments2 {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
    pub third: Vector4<f64>,
}

impl Moments2 {
    pub fn of(pc: &PointCloud) -> Self {
        assert_eq!(pc.d(), 2);
        let n = pc.n() as f64;
        let mut mean = Vector2::zeros();
        for r in pc.rows() {
            mean += Vector2::new(r[0], r[1]);
        }
        mean /= n;
        let mut cov = Matrix2::zeros();
        let mut third = Vector4::zeros();
        for r in pc.rows() {
            let (x, y) = (r[0] - mean[0], r[1] - mean[1]);
            cov += Matrix2::new(x * x, x * y, x * y, y * y);
            third += Vector4::new(x * x * x, x * x * y, x * y * y, y * y * y);
        }
        Self {
            mean,
            cov: cov / (n - 1.0),
            third: third / n,
        }
    }
}

/// Affine map sending `pc` to the mean and covariance of `target`.
fn recolor(pc: &[Vector2<f64>], target: &Moments2) -> Result<Vec<Vector2<f64>>> {
    let n = pc.len() as f64;
    let mean = pc.iter().sum::<Vector2<f64>>() / n;
    let mut cov = Matrix2::zeros();
    for p in pc {
        let c = p - mean;
        cov += c * c.transpose();
    }
    cov /= n - 1.0;
    let singular = || ImdError::InvalidParameter("degenerate covariance in moment matching".into());
    let l_src = Cholesky::new(cov).ok_or_else(singular)?.l();
    let l_dst = Cholesky::new(target.cov).ok_or_else(singular)?.l();
    let map = l_dst * l_src.try_inverse().ok_or_else(singular)?;
    Ok(pc.iter().map(|p| map * (p - mean) + target.mean).collect())
}

/// Quadratic warp of whitened samples followed by recoloring.
fn warp(base: &[Vector2<f64>], p: &Vector4<f64>, target: &Moments2) -> Result<Vec<Vector2<f64>>> {
    let bent: Vec<Vector2<f64>> = base
        .iter()
        .map(|z| {
            let (a, b) = (z[0] * z[0], z[1] * z[1]);
            Vector2::new(z[0] + p[0] * a + p[1] * b, z[1] + p[2] * a + p[3] * b)
        })
        .collect();
    recolor(&bent, target)
}

fn to_cloud(pts: &[Vector2<f64>]) -> Result<PointCloud> {
    PointCloud::new(pts.len(), 2, pts.iter().flat_map(|p| [p[0], p[1]]).collect())
}

/// Deforms `base` until its mean, covariance and third central moments equal
/// those of `target`.
///
/// The base is whitened, bent by a quadratic map and recolored to the target
/// mean and covariance; Newton iterations on the four third-moment equations
/// pick the map.
pub fn match_moments(base: &PointCloud, target: &PointCloud) -> Result<PointCloud> {
    let goal = Moments2::of(target);
    let white = recolor(
        &base.rows().map(|r| Vector2::new(r[0], r[1])).collect::<Vec<_>>(),
        &Moments2 {
            mean: Vector2::zeros(),
            cov: Matrix2::identity(),
            third: Vector4::zeros(),
        },
    )?;
    let scale = goal.cov[(0, 0)].max(goal.cov[(1, 1)]).powf(1.5);
    let residual = |p: &Vector4<f64>| -> Result<Vector4<f64>> {
        let pc = to_cloud(&warp(&white, p, &goal)?)?;
        Ok((Moments2::of(&pc).third - goal.third) / scale)
    };

    let mut p = Vector4::zeros();
    let mut r = residual(&p)?;
    for _ in 0..100 {
        if r.norm() < 1e-13 {
            break;
        }
        let h = 1e-6;
        let mut jac = Matrix4::zeros();
        for j in 0..4 {
            let mut e = Vector4::zeros();
            e[j] = h;
            let col = (residual(&(p + e))? - residual(&(p - e))?) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let step = jac
            .lu()
            .solve(&(-r))
            .ok_or_else(|| ImdError::InvalidParameter("singular Jacobian in moment matching".into()))?;
        let mut lambda = 1.0;
        while lambda > 1e-6 {
            let cand = p + step * lambda;
            if let Ok(rc) = residual(&cand) {
                if rc.norm() < r.norm() {
                    p = cand;
                    r = rc;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if lambda <= 1e-6 {
            break;
        }
    }
    if r.norm() > 1e-8 {
        return Err(ImdError::InvalidParameter(format!(
            "moment matching did not converge (residual {:.3e})",
            r.norm()
        )));
    }
    to_cloud(&warp(&white, &p, &goal)?)
}

const RING_CENTERS: [[f64; 2]; 3] = [[-2.5, -1.0], [0.5, 2.0], [2.5, -1.5]];

/// Three thin circles of radius 1 at the corners of a triangle.
pub fn rings(n: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = SplitMix64::new(seed);
    let mut data = Vec::with_capacity(2 * n);
    for i in 0..n {
        let [cx, cy] = RING_CENTERS[i % RING_CENTERS.len()];
        let phi = std::f64::consts::TAU * rng.next_f64();
        let r = 1.0 + 0.002 * rng.gaussian();
        data.extend([cx + r * phi.cos(), cy + r * phi.sin()]);
    }
    PointCloud::new(n, 2, data)
}

/// Three rings and a Gaussian-mixture blob deformed to share their mean,
/// covariance and third central moments.
pub fn moments_matched_pair(n: usize, seed: u64) -> Result<(PointCloud, PointCloud)> {
    let shape = rings(n, seed)?;
    let mut rng = SplitMix64::new(seed ^ 0xB10B);
    let mut data = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (mx, sd) = if i % 2 == 0 { (-0.7, 1.0) } else { (0.7, 1.2) };
        data.extend([mx + sd * rng.gaussian(), sd * rng.gaussian()]);
    }
    let blob = match_moments(&PointCloud::new(n, 2, data)?, &shape)?;
    Ok((shape, blob))
}

/// Generator names accepted by [`generate`].
pub const KINDS: &[&str] = &["blob", "clusters", "torus", "torus_holefill", "moments_matched_pair"];

/// Generates dataset `kind`. Pairs come back as two clouds, everything else
/// as one.
pub fn generate(kind: &str, n: usize, d: usize, seed: u64) -> Result<Vec<PointCloud>> {
    if n < 10 {
        return Err(ImdError::InvalidParameter(format!("need at least 10 points, got {n}")));
    }
    Ok(match kind {
        "blob" => vec![blob(n, d, seed)?],
        "clusters" => vec![clusters(n, d, 10, 10.0, seed)?],
        "torus" => vec![torus(n, seed)?],
        "torus_holefill" => vec![torus_holefill(n, HOLE_FRACTION, seed)?],
        "moments_matched_pair" => {
            let (a, b) = moments_matched_pair(n, seed)?;
            vec![a, b]
        }
        other => {
            return Err(ImdError::InvalidParameter(format!(
                "unknown dataset {other:?}; expected one of {}",
                KINDS.join(", ")
            )))
        }
    })
}

/// Covariance of an arbitrary cloud, for tests.
pub fn covariance(pc: &PointCloud) -> DMatrix<f64> {
    let (n, d) = (pc.n(), pc.d());
    let mean: Vec<f64> = (0..d)
        .map(|j| pc.rows().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    DMatrix::from_fn(d, d, |i, j| {
        pc.rows().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1) as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_points_lie_on_surface() {
        let pc = torus(1000, 4).unwrap();
        for r in pc.rows() {
            let rho = (r[0] * r[0] + r[1] * r[1]).sqrt();
            let resid = (rho - TORUS_MAJOR).powi(2) + r[2] * r[2] - TORUS_MINOR * TORUS_MINOR;
            assert!(resid.abs() < 1e-9);
        }
    }

    #[test]
    fn holefill_places_expected_fraction_inside() {
        let pc = torus_holefill(2000, 0.05, 1).unwrap();
        let inside = pc
            .rows()
            .filter(|r| (r[0] * r[0] + r[1] * r[1]).sqrt() < TORUS_MAJOR - TORUS_MINOR - 1e-9)
            .count();
        assert_eq!(inside, 100);
    }

    #[test]
    fn generators_are_deterministic() {
        for kind in KINDS {
            let a = generate(kind, 200, 3, 9).unwrap();
            let b = generate(kind, 200, 3, 9).unwrap();
            assert_eq!(a, b, "{kind}");
        }
        assert!(generate("blob", 9, 2, 1).is_err());
        assert!(generate("nope", 100, 2, 1).is_err());
    }

    fn assert_moments_close(a: &PointCloud, b: &PointCloud, tol: f64) {
        let (ma, mb) = (Moments2::of(a), Moments2::of(b));
        let s = ma.cov[(0, 0)].max(ma.cov[(1, 1)]).sqrt();
        // Relative agreement with a floor at the natural scale of each moment.
        let close = |x: f64, y: f64, scale: f64| (x - y).abs() <= tol * x.abs().max(y.abs()).max(scale);
        for i in 0..2 {
            assert!(close(ma.mean[i], mb.mean[i], s), "mean {i}");
        }
        for i in 0..4 {
            assert!(close(ma.cov[i], mb.cov[i], s * s), "cov {i}");
            assert!(close(ma.third[i], mb.third[i], s * s * s), "third {i}");
        }
        assert!(ma.third.norm() > 0.05 * s * s * s, "shape should be skewed");
    }

    #[test]
    fn matching_hits_target_moments() {
        let target = rings(3000, 5).unwrap();
        let matched = match_moments(&blob(3000, 2, 6).unwrap(), &target).unwrap();
        assert_moments_close(&target, &matched, 1e-9);
    }

    #[test]
    fn matched_pair_shares_three_moments() {
        let (a, b) = moments_matched_pair(5000, 3).unwrap();
        assert_moments_close(&a, &b, 1e-2);
    }
}
