//! Stochastic Lanczos quadrature for heat kernel traces.
//!
//! For each probe vector `v_i` an `m`-step Lanczos run yields a Gauss rule
//! `(theta_k, w_k)` for the spectral measure of `v_i`. The rules do not depend
//! on the temperature, so they are computed once and reused for every `t`:
//!
//! ```text
//! tr(exp(-tL)) ~ (n / n_v) * sum_i sum_k w_ik * exp(-t * theta_ik)
//! ```
//!
//! With a control variate the exactly known trace of a low-order polynomial
//! in `L` is added back and only the remainder is estimated.

mod bounds;
mod exact;
mod grid;
mod lanczos;
mod quadrature;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bounds::lanczos_error_bound;
pub use exact::{
    dense_eigen, dense_spectrum, heat_trace_exact, hkt_from_spectrum, DEFAULT_ORACLE_CAP,
};
pub use grid::TemperatureGrid;
pub use lanczos::{lanczos, LanczosResult, Tridiagonal, BREAKDOWN_TOL, UNIT_TOL};
pub use quadrature::{quadrature_from_tridiagonal, tridiagonal_eigen, Quadrature, TridiagonalEigen};

use crate::descriptor::HeatTraceDescriptor;
use crate::error::{ImdError, Result};
use crate::laplacian::SparseLaplacian;
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeDistribution {
    Rademacher,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceReduction {
    Off,
    /// Control variate `I - a t L` with `a = exp(-t)`.
    LinearCv,
    /// Control variate `I - t L + t^2 L^2 / 2`.
    Taylor2,
}

impl std::fmt::Display for ProbeDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProbeDistribution::Rademacher => "rademacher",
            ProbeDistribution::Gaussian => "gaussian",
        })
    }
}

impl std::fmt::Display for VarianceReduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VarianceReduction::Off => "off",
            VarianceReduction::LinearCv => "linear_cv",
            VarianceReduction::Taylor2 => "taylor2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SlqParams {
    /// Lanczos steps per probe.
    pub lanczos_steps: usize,
    pub probes: usize,
    pub probe_distribution: ProbeDistribution,
    pub seed: u64,
    pub variance_reduction: VarianceReduction,
}

impl Default for SlqParams {
    fn default() -> Self {
        Self {
            lanczos_steps: 10,
            probes: 100,
            probe_distribution: ProbeDistribution::Rademacher,
            seed: 0,
            variance_reduction: VarianceReduction::LinearCv,
        }
    }
}

impl SlqParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanczos_steps == 0 {
            return Err(ImdError::InvalidParameter("Lanczos steps must be >= 1".into()));
        }
        if self.probes == 0 {
            return Err(ImdError::InvalidParameter("probe count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Unit-norm probe vector `i` drawn from sub-stream `i` of `seed`.
///
/// Rademacher entries are exactly `+-1/sqrt(n)`.
pub fn probe_vector(n: usize, dist: ProbeDistribution, seed: u64, i: usize) -> Vec<f64> {
    let mut rng = SplitMix64::substream(seed, i as u64);
    match dist {
        ProbeDistribution::Rademacher => {
            let scale = (n as f64).sqrt();
            (0..n).map(|_| rng.next_sign() / scale).collect()
        }
        ProbeDistribution::Gaussian => {
            let mut v = vec![0.0; n];
            rng.fill_gaussian(&mut v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            v
        }
    }
}

/// Per-probe Gauss rules for one Laplacian. Independent of temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSet {
    n: usize,
    trace: f64,
    frobenius_sq: f64,
    rules: Vec<Quadrature>,
}

impl QuadratureSet {
    /// Runs Lanczos once per probe. Probes are processed in parallel; the
    /// rules are stored in probe order.
    ///
    /// The step count is capped at `n`.
    pub fn build(l: &SparseLaplacian, params: &SlqParams) -> Result<Self> {
        params.validate()?;
        let n = l.n();
        let m = params.lanczos_steps.min(n);
        let rules = (0..params.probes)
            .into_par_iter()
            .map(|i| {
                let v = probe_vector(n, params.probe_distribution, params.seed, i);
                let run = lanczos(l, &v, m, false)?;
                Ok(quadrature_from_tridiagonal(&run.tridiagonal))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            trace: l.trace(),
            frobenius_sq: l.frobenius_sq(),
            rules,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rules(&self) -> &[Quadrature] {
        &self.rules
    }

    /// Quadrature value of the estimated integrand for one probe.
    #[inline]
    fn probe_term(rule: &Quadrature, t: f64, vr: VarianceReduction) -> f64 {
        match vr {
            VarianceReduction::Off => rule.integrate(|x| (-t * x).exp()),
            VarianceReduction::LinearCv => {
                let at = (-t).exp() * t;
                rule.integrate(|x| (-t * x).exp() - 1.0 + at * x)
            }
            VarianceReduction::Taylor2 => {
                let h = 0.5 * t * t;
                rule.integrate(|x| (-t * x).exp() - 1.0 + t * x - h * x * x)
            }
        }
    }

    /// Exact trace of the control variate polynomial.
    #[inline]
    fn correction(&self, t: f64, vr: VarianceReduction) -> f64 {
        let n = self.n as f64;
        match vr {
            VarianceReduction::Off => 0.0,
            VarianceReduction::LinearCv => n - (-t).exp() * t * self.trace,
            VarianceReduction::Taylor2 => n - t * self.trace + 0.5 * t * t * self.frobenius_sq,
        }
    }

    /// Estimate of `tr(exp(-tL))`.
    pub fn estimate(&self, t: f64, vr: VarianceReduction) -> f64 {
        let mut sum = 0.0;
        for rule in &self.rules {
            sum += Self::probe_term(rule, t, vr);
        }
        self.n as f64 / self.rules.len() as f64 * sum + self.correction(t, vr)
    }

    pub fn estimate_grid(&self, grid: &TemperatureGrid, vr: VarianceReduction) -> Vec<f64> {
        grid.values().iter().map(|&t| self.estimate(t, vr)).collect()
    }

    /// Single-probe estimates of the trace; their mean is [`Self::estimate`]
    /// up to rounding.
    pub fn probe_estimates(&self, t: f64, vr: VarianceReduction) -> Vec<f64> {
        let n = self.n as f64;
        let c = self.correction(t, vr);
        self.rules
            .iter()
            .map(|r| n * Self::probe_term(r, t, vr) + c)
            .collect()
    }
}

/// SLQ estimate of the heat kernel trace of `l` over `grid`.
pub fn heat_trace(
    l: &SparseLaplacian,
    grid: &TemperatureGrid,
    params: &SlqParams,
) -> Result<HeatTraceDescriptor> {
    let set = QuadratureSet::build(l, params)?;
    let hkt = set.estimate_grid(grid, params.variance_reduction);
    Ok(HeatTraceDescriptor::from_slq(l.n(), grid.clone(), hkt, params))
}
