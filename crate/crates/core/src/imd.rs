//! Descriptor construction and the heat-trace distance.
//!
//! The distance between two descriptors is the scaled sup-norm gap
//!
//! ```text
//! sup_t exp(-2 (t + 1/t)) * |hkt_a(t) - hkt_b(t)|
//! ```
//!
//! evaluated on the shared temperature grid. The weight peaks at `t = 1`.

use serde::{Deserialize, Serialize};

use crate::descriptor::HeatTraceDescriptor;
use crate::error::{ImdError, Result};
use crate::knn::{knn_approx, knn_exact, KnnGraph, KnnMode, NnDescentParams};
use crate::laplacian::{laplacian, SparseLaplacian};
use crate::pointcloud::PointCloud;
use crate::slq::{heat_trace, heat_trace_exact, SlqParams, TemperatureGrid};

/// Everything needed to turn a point cloud into a descriptor.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorConfig {
    pub k: usize,
    pub knn_mode: KnnMode,
    pub nn_descent: NnDescentParams,
    pub slq: SlqParams,
    pub grid: TemperatureGrid,
    /// Use the dense eigensolver instead of SLQ, up to this many points.
    pub oracle_cap: Option<usize>,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            k: 5,
            knn_mode: KnnMode::Exact,
            nn_descent: NnDescentParams::default(),
            slq: SlqParams::default(),
            grid: TemperatureGrid::default(),
            oracle_cap: None,
        }
    }
}

impl DescriptorConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.slq.seed = seed;
        self
    }
}

/// Intermediate products of [`imdesc`], for reporting.
#[derive(Clone, Debug)]
pub struct Description {
    pub descriptor: HeatTraceDescriptor,
    pub graph: KnnGraph,
    pub laplacian: SparseLaplacian,
}

pub fn build_graph(pc: &PointCloud, cfg: &DescriptorConfig) -> Result<KnnGraph> {
    match cfg.knn_mode {
        KnnMode::Exact => knn_exact(pc, cfg.k),
        KnnMode::Approx => knn_approx(pc, cfg.k, cfg.slq.seed, cfg.nn_descent),
    }
}

/// kNN graph, Laplacian and heat trace of `pc`.
pub fn describe(pc: &PointCloud, cfg: &DescriptorConfig) -> Result<Description> {
    cfg.slq.validate()?;
    let graph = build_graph(pc, cfg)?;
    let lap = laplacian(&graph);
    let mut descriptor = match cfg.oracle_cap {
        Some(cap) => heat_trace_exact(&lap, &cfg.grid, cap)?,
        None => heat_trace(&lap, &cfg.grid, &cfg.slq)?,
    };
    descriptor.k = Some(cfg.k);
    descriptor.knn_mode = Some(cfg.knn_mode);
    if cfg.oracle_cap.is_some() {
        descriptor.seed = cfg.slq.seed;
    }
    Ok(Description {
        descriptor,
        graph,
        laplacian: lap,
    })
}

/// Heat trace descriptor of a point cloud.
pub fn imdesc(pc: &PointCloud, cfg: &DescriptorConfig) -> Result<HeatTraceDescriptor> {
    describe(pc, cfg).map(|d| d.descriptor)
}

/// `exp(-2 (t + 1/t))`.
#[inline]
pub fn scale_weight(t: f64) -> f64 {
    (-2.0 * (t + 1.0 / t)).exp()
}

/// Spacing of the lattice that weighted traces are snapped to.
pub const LATTICE: f64 = 1.0 / 4294967296.0;
const LATTICE_LIMIT: f64 = 1048576.0;

/// Rounds `x` to a multiple of [`LATTICE`]. Below `2^20` in magnitude the
/// difference of two snapped values is then exact, so the distance obeys the
/// triangle inequality in floating point and not only in exact arithmetic.
/// Larger values are left as they are.
#[inline]
fn snap(x: f64) -> f64 {
    if x.abs() < LATTICE_LIMIT {
        (x / LATTICE).round() * LATTICE
    } else {
        x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImdReport {
    pub distance: f64,
    pub argmax_t: f64,
    pub grid: TemperatureGrid,
    /// Weighted absolute gap at every grid point.
    pub curve: Vec<f64>,
    pub normalized: bool,
    /// Sample counts `(a.n, b.n)` when they differ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_mismatch: Option<(usize, usize)>,
}

/// Distance between two descriptors on the same grid.
///
/// Differing sample counts are allowed but flagged in the report and
/// logged, since the trace scales with `n`.
pub fn imdist(a: &HeatTraceDescriptor, b: &HeatTraceDescriptor) -> Result<ImdReport> {
    if a.grid != b.grid {
        return Err(ImdError::GridMismatch);
    }
    if a.normalized != b.normalized {
        return Err(ImdError::InvalidParameter(
            "cannot compare a normalized descriptor with an unnormalized one".into(),
        ));
    }
    let n_mismatch = (a.n != b.n).then_some((a.n, b.n));
    if let Some((na, nb)) = n_mismatch {
        log::warn!("comparing descriptors with different sample counts ({na} vs {nb})");
    }
    let curve: Vec<f64> = a
        .grid
        .values()
        .iter()
        .zip(a.hkt.iter().zip(&b.hkt))
        .map(|(&t, (&ha, &hb))| {
            let w = scale_weight(t);
            (snap(w * ha) - snap(w * hb)).abs()
        })
        .collect();
    let mut best = 0;
    for (j, &c) in curve.iter().enumerate() {
        if c > curve[best] {
            best = j;
        }
    }
    Ok(ImdReport {
        distance: curve[best],
        argmax_t: a.grid.values()[best],
        grid: a.grid.clone(),
        curve,
        normalized: a.normalized,
        n_mismatch,
    })
}

/// Linear spectrum on `[1 - 2/sqrt(k), 1 + 2/sqrt(k)]` standing in for a
/// random graph of average degree `k`.
pub fn null_spectrum(n: usize, k: f64) -> Result<Vec<f64>> {
    if !(k > 4.0) {
        return Err(ImdError::DegenerateNullModel(k));
    }
    let half = 2.0 / k.sqrt();
    let lo = 1.0 - half;
    if n == 1 {
        return Ok(vec![lo]);
    }
    let step = 2.0 * half / (n - 1) as f64;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

/// Heat trace of the null spectrum at `t`.
pub fn null_hkt(n: usize, k: f64, t: f64) -> Result<f64> {
    Ok(null_spectrum(n, k)?.iter().map(|&l| (-t * l).exp()).sum())
}

/// Divides each trace value by that of the random-graph null model.
pub fn er_normalize(desc: &HeatTraceDescriptor, k: f64) -> Result<HeatTraceDescriptor> {
    if desc.normalized {
        return Err(ImdError::InvalidParameter("descriptor is already normalized".into()));
    }
    let spectrum = null_spectrum(desc.n, k)?;
    let mut out = desc.clone();
    for (h, &t) in out.hkt.iter_mut().zip(desc.grid.values()) {
        let null: f64 = spectrum.iter().map(|&l| (-t * l).exp()).sum();
        *h /= null;
    }
    out.normalized = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slq::{ProbeDistribution, VarianceReduction};
    use proptest::prelude::*;

    fn desc(grid: &[f64], hkt: Vec<f64>, n: usize) -> HeatTraceDescriptor {
        HeatTraceDescriptor {
            version: 1,
            n,
            k: Some(5),
            knn_mode: Some(KnnMode::Exact),
            m: 10,
            nv: 100,
            probe: ProbeDistribution::Rademacher,
            vr: VarianceReduction::LinearCv,
            seed: 0,
            grid: TemperatureGrid::new(grid.to_vec()).unwrap(),
            hkt,
            exact: false,
            normalized: false,
            created_with: "test".into(),
            source_hash: None,
        }
    }

    #[test]
    fn self_distance_is_zero() {
        let a = desc(&[0.5, 1.0, 2.0], vec![9.0, 5.0, 3.0], 10);
        let r = imdist(&a, &a).unwrap();
        assert_eq!(r.distance, 0.0);
        assert!(r.n_mismatch.is_none());
    }

    #[test]
    fn constant_gap_peaks_at_unit_temperature() {
        let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
        let a = desc(&grid, vec![10.0; 5], 10);
        let b = desc(&grid, vec![9.0; 5], 10);
        let r = imdist(&a, &b).unwrap();
        assert_eq!(r.argmax_t, 1.0);
        assert!((r.distance - (-4.0f64).exp()).abs() <= LATTICE);
        assert!((r.distance - 0.0183156).abs() < 1e-7);
    }

    #[test]
    fn grid_mismatch() {
        let a = desc(&[1.0, 2.0], vec![1.0, 1.0], 3);
        let b = desc(&[1.0, 3.0], vec![1.0, 1.0], 3);
        assert!(matches!(imdist(&a, &b), Err(ImdError::GridMismatch)));
    }

    #[test]
    fn differing_sample_counts_are_flagged() {
        let a = desc(&[1.0], vec![1.0], 3);
        let b = desc(&[1.0], vec![1.0], 4);
        assert_eq!(imdist(&a, &b).unwrap().n_mismatch, Some((3, 4)));
    }

    #[test]
    fn null_spectrum_range_for_k5() {
        let s = null_spectrum(11, 5.0).unwrap();
        assert!((s[0] - (1.0 - 2.0 / 5f64.sqrt())).abs() < 1e-15);
        assert!((s[0] - 0.10557).abs() < 1e-5);
        assert!((s[10] - 1.89443).abs() < 1e-5);
        assert!(matches!(null_spectrum(5, 4.0), Err(ImdError::DegenerateNullModel(_))));
    }

    #[test]
    fn normalizing_the_null_model_gives_ones() {
        let grid = TemperatureGrid::default();
        let n = 50;
        let hkt = grid.values().iter().map(|&t| null_hkt(n, 5.0, t).unwrap()).collect();
        let d = desc(grid.values(), hkt, n);
        let norm = er_normalize(&d, 5.0).unwrap();
        assert!(norm.normalized);
        for v in &norm.hkt {
            assert!((v - 1.0).abs() < 1e-14);
        }
        assert!(er_normalize(&norm, 5.0).is_err());
    }

    fn smooth_pair(grid: &TemperatureGrid) -> (HeatTraceDescriptor, HeatTraceDescriptor) {
        let f = |t: f64, a: f64| 1.0 + 999.0 * (-a * t).exp() + 20.0 * (-0.2 * t).exp();
        let ha = grid.values().iter().map(|&t| f(t, 0.9)).collect();
        let hb = grid.values().iter().map(|&t| f(t, 1.1)).collect();
        (desc(grid.values(), ha, 1000), desc(grid.values(), hb, 1000))
    }

    #[test]
    fn grid_doubling_changes_distance_little() {
        let g256 = TemperatureGrid::default();
        let g512 = TemperatureGrid::log_spaced(0.1, 10.0, 512).unwrap();
        let (a, b) = smooth_pair(&g256);
        let (c, d) = smooth_pair(&g512);
        let d256 = imdist(&a, &b).unwrap().distance;
        let d512 = imdist(&c, &d).unwrap().distance;
        assert!(((d512 - d256) / d512).abs() < 0.01);
    }

    #[test]
    fn lattice_differences_are_exact() {
        let grid = [1.0];
        let a = desc(&grid, vec![87.58994068889746], 10);
        let b = desc(&grid, vec![314.4125531261645], 10);
        let c = desc(&grid, vec![451.3832552507747], 10);
        let d = |x, y| imdist(x, y).unwrap().distance;
        assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn pseudo_metric_axioms(
            xs in proptest::collection::vec((0.0f64..1e3, 0.0f64..1e3, 0.0f64..1e3), 6)
        ) {
            let grid = [0.1, 0.3, 1.0, 3.0, 5.0, 10.0];
            let a = desc(&grid, xs.iter().map(|x| x.0).collect(), 10);
            let b = desc(&grid, xs.iter().map(|x| x.1).collect(), 10);
            let c = desc(&grid, xs.iter().map(|x| x.2).collect(), 10);
            let ab = imdist(&a, &b).unwrap().distance;
            prop_assert_eq!(ab, imdist(&b, &a).unwrap().distance);
            let ac = imdist(&a, &c).unwrap().distance;
            let bc = imdist(&b, &c).unwrap().distance;
            prop_assert!(ac <= ab + bc);
            prop_assert!(ab >= 0.0);
        }
    }
}
