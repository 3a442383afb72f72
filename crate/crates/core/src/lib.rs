//! Intrinsic multi-scale distance between point clouds.
//!
//! Each cloud becomes a kNN graph, the graph its normalized Laplacian, and
//! the Laplacian a heat kernel trace sampled on a temperature grid by
//! stochastic Lanczos quadrature. Two traces are compared with a weighted
//! sup-norm.
//!
//! ```
//! use imd_core::{imdesc, imdist, synth, DescriptorConfig};
//!
//! let a = synth::blob(300, 3, 1).unwrap();
//! let b = synth::blob(300, 3, 2).unwrap();
//! let cfg = DescriptorConfig::default();
//! let d = imdist(&imdesc(&a, &cfg).unwrap(), &imdesc(&b, &cfg).unwrap()).unwrap();
//! assert!(d.distance >= 0.0);
//! ```

pub mod baselines;
pub mod descriptor;
pub mod error;
pub mod imd;
pub mod knn;
pub mod laplacian;
pub mod pointcloud;
pub mod rng;
pub mod slq;
pub mod stats;
pub mod synth;

pub use baselines::{fid, kid};
pub use descriptor::{load_descriptor, save_descriptor, HeatTraceDescriptor, DESCRIPTOR_VERSION};
pub use error::{ImdError, Result};
pub use imd::{describe, er_normalize, imdesc, imdist, DescriptorConfig, ImdReport};
pub use knn::{knn_approx, knn_exact, KnnGraph, KnnMode, NnDescentParams};
pub use laplacian::{laplacian, SparseLaplacian, SymmetricOperator};
pub use pointcloud::{load_pointcloud, save_pointcloud, subsample, PointCloud};
pub use slq::{heat_trace, heat_trace_exact, ProbeDistribution, SlqParams, TemperatureGrid, VarianceReduction};
