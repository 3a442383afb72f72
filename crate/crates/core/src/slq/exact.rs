//! Dense eigendecomposition oracle.

use nalgebra::{DMatrix, DVector};

use super::TemperatureGrid;
use crate::descriptor::HeatTraceDescriptor;
use crate::error::{ImdError, Result};
use crate::laplacian::SparseLaplacian;

pub const DEFAULT_ORACLE_CAP: usize = 4000;

fn check_cap(l: &SparseLaplacian, cap: usize) -> Result<()> {
    if l.n() > cap {
        Err(ImdError::TooLargeForOracle { n: l.n(), cap })
    } else {
        Ok(())
    }
}

/// All eigenvalues of `l`, ascending.
pub fn dense_spectrum(l: &SparseLaplacian, cap: usize) -> Result<Vec<f64>> {
    check_cap(l, cap)?;
    let mut ev: Vec<f64> = l.to_dense().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Eigenvalues and orthonormal eigenvectors (columns) of `l`.
pub fn dense_eigen(l: &SparseLaplacian, cap: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_cap(l, cap)?;
    let e = l.to_dense().symmetric_eigen();
    Ok((e.eigenvalues, e.eigenvectors))
}

/// `sum_i exp(-t * lambda_i)`. Valid for any `t >= 0`.
pub fn hkt_from_spectrum(spectrum: &[f64], t: f64) -> f64 {
    spectrum.iter().map(|&l| (-t * l).exp()).sum()
}

/// Heat kernel trace from the full spectrum.
pub fn heat_trace_exact(
    l: &SparseLaplacian,
    grid: &TemperatureGrid,
    cap: usize,
) -> Result<HeatTraceDescriptor> {
    let spectrum = dense_spectrum(l, cap)?;
    let hkt = grid
        .values()
        .iter()
        .map(|&t| hkt_from_spectrum(&spectrum, t))
        .collect();
    Ok(HeatTraceDescriptor::from_exact(l.n(), grid.clone(), hkt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::KnnGraph;
    use crate::laplacian::laplacian;

    #[test]
    fn p2_at_unit_temperature() {
        let l = laplacian(&KnnGraph::from_edges(2, [(0, 1)]).unwrap());
        let grid = TemperatureGrid::new(vec![1.0]).unwrap();
        let d = heat_trace_exact(&l, &grid, DEFAULT_ORACLE_CAP).unwrap();
        assert!((d.hkt[0] - (1.0 + (-2.0f64).exp())).abs() < 1e-14);
        assert!((d.hkt[0] - 1.135335).abs() < 1e-6);
        assert!(d.exact);
    }

    #[test]
    fn zero_temperature_gives_n() {
        let l = laplacian(&KnnGraph::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap());
        let spectrum = dense_spectrum(&l, 10).unwrap();
        assert_eq!(hkt_from_spectrum(&spectrum, 0.0), 5.0);
    }

    #[test]
    fn long_time_limit_counts_components() {
        let edges = [(0, 1), (1, 2), (2, 0), (3, 4), (5, 6), (6, 7)];
        let l = laplacian(&KnnGraph::from_edges(8, edges).unwrap());
        let spectrum = dense_spectrum(&l, 10).unwrap();
        let c = l.component_count() as f64;
        assert_eq!(c, 3.0);
        let lambda_min = spectrum.iter().copied().filter(|&v| v > 1e-9).fold(f64::INFINITY, f64::min);
        let h = hkt_from_spectrum(&spectrum, 100.0);
        assert!((h - c).abs() <= 8.0 * (-100.0 * lambda_min).exp() + 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let l = laplacian(&KnnGraph::from_edges(5, [(0, 1)]).unwrap());
        assert!(matches!(
            dense_spectrum(&l, 4),
            Err(ImdError::TooLargeForOracle { n: 5, cap: 4 })
        ));
    }
}
