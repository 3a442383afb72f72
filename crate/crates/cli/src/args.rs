use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use imd_core::pointcloud::{CsvOptions, Format};
use imd_core::slq::DEFAULT_ORACLE_CAP;
use imd_core::{DescriptorConfig, KnnMode, ProbeDistribution, SlqParams, TemperatureGrid, VarianceReduction};

use crate::fail::{CliError, CliResult};

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\ndescriptor format 1\npoint format IMDM 1"
);

#[derive(Parser, Debug)]
#[command(name = "imd", version, long_version = LONG_VERSION)]
#[command(about = "Intrinsic multi-scale distance between point clouds")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "IMD_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the heat trace descriptor of a point cloud.
    Desc(DescArgs),
    /// Distance between two descriptors or point files.
    Dist(DistArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// FID or KID between two point files.
    Baseline(BaselineArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    Auto,
    Csv,
    Imdm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KnnArg {
    Exact,
    Approx,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeArg {
    Rademacher,
    Gaussian,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VrArg {
    Off,
    #[value(name = "linear_cv")]
    LinearCv,
    Taylor2,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalizeArg {
    Er,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    Fid,
    Kid,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Point file format.
    #[arg(long, value_enum, default_value = "auto")]
    pub format: FormatArg,

    /// CSV input has a header line.
    #[arg(long)]
    pub header: bool,
}

impl InputArgs {
    pub fn format(&self) -> Format {
        match self.format {
            FormatArg::Auto => Format::Auto,
            FormatArg::Csv => Format::Csv,
            FormatArg::Imdm => Format::Imdm,
        }
    }

    pub fn csv(&self) -> CsvOptions {
        CsvOptions { header: self.header }
    }
}

/// Flags that determine a descriptor.
#[derive(Args, Debug, Clone)]
pub struct DescriptorArgs {
    /// Neighbors per point.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,

    #[arg(long, value_enum, default_value = "exact")]
    pub knn: KnnArg,

    /// Lanczos steps.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub m: u32,

    /// Probe vectors.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub nv: u32,

    #[arg(long, default_value_t = TemperatureGrid::DEFAULT_MIN)]
    pub t_min: f64,

    #[arg(long, default_value_t = TemperatureGrid::DEFAULT_MAX)]
    pub t_max: f64,

    #[arg(long, default_value_t = TemperatureGrid::DEFAULT_STEPS as u32, value_parser = clap::value_parser!(u32).range(1..))]
    pub t_steps: u32,

    #[arg(long, value_enum, default_value = "rademacher")]
    pub probe: ProbeArg,

    /// Variance reduction.
    #[arg(long, value_enum, default_value = "linear_cv")]
    pub vr: VrArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Use the dense eigensolver instead of SLQ.
    #[arg(long)]
    pub oracle: bool,

    /// Largest n accepted by the dense eigensolver.
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    pub oracle_cap: usize,
}

impl DescriptorArgs {
    pub fn config(&self) -> CliResult<DescriptorConfig> {
        let grid = TemperatureGrid::log_spaced(self.t_min, self.t_max, self.t_steps as usize)
            .map_err(|e| CliError::usage(format!("--t-min/--t-max/--t-steps: {e}")))?;
        Ok(DescriptorConfig {
            k: self.k as usize,
            knn_mode: match self.knn {
                KnnArg::Exact => KnnMode::Exact,
                KnnArg::Approx => KnnMode::Approx,
            },
            slq: SlqParams {
                lanczos_steps: self.m as usize,
                probes: self.nv as usize,
                probe_distribution: match self.probe {
                    ProbeArg::Rademacher => ProbeDistribution::Rademacher,
                    ProbeArg::Gaussian => ProbeDistribution::Gaussian,
                },
                seed: self.seed,
                variance_reduction: match self.vr {
                    VrArg::Off => VarianceReduction::Off,
                    VrArg::LinearCv => VarianceReduction::LinearCv,
                    VrArg::Taylor2 => VarianceReduction::Taylor2,
                },
            },
            grid,
            oracle_cap: self.oracle.then_some(self.oracle_cap),
            ..DescriptorConfig::default()
        })
    }

    /// Canonical text of every flag that affects the descriptor, for cache
    /// keys.
    pub fn fingerprint(&self) -> String {
        format!(
            "k={} knn={:?} m={} nv={} t={:?}:{:?}:{} probe={:?} vr={:?} seed={} oracle={}",
            self.k,
            self.knn,
            self.m,
            self.nv,
            self.t_min,
            self.t_max,
            self.t_steps,
            self.probe,
            self.vr,
            self.seed,
            self.oracle,
        )
    }
}

#[derive(Args, Debug)]
pub struct DescArgs {
    /// Point file, or `-` for stdin.
    pub input: PathBuf,

    /// Descriptor output path (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    #[command(flatten)]
    pub input_args: InputArgs,

    #[command(flatten)]
    pub descriptor: DescriptorArgs,

    /// Write the kNN edge list to this file.
    #[arg(long)]
    pub dump_graph: Option<PathBuf>,

    /// Uniformly subsample this many points first (seeded by --seed).
    #[arg(long)]
    pub subsample: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DistArgs {
    /// Descriptor JSON or point file.
    pub a: PathBuf,
    /// Descriptor JSON or point file.
    pub b: PathBuf,

    #[command(flatten)]
    pub input_args: InputArgs,

    #[command(flatten)]
    pub descriptor: DescriptorArgs,

    /// Do not read or write `<name>.imd.json` caches.
    #[arg(long)]
    pub no_cache: bool,

    /// Print the full report as JSON.
    #[arg(long)]
    pub json: bool,

    /// Write the per-temperature curve as CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,

    /// Normalize both traces by a null model before comparing.
    #[arg(long, value_enum)]
    pub normalize: Option<NormalizeArg>,

    /// Average degree of the null model (default: the descriptor's k).
    #[arg(long)]
    pub null_degree: Option<f64>,

    /// Recompute with this many consecutive seeds and report mean and CI.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub repeat: Option<u32>,

    /// Confidence level for --repeat.
    #[arg(long, default_value_t = 0.99)]
    pub ci: f64,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// One of blob, clusters, torus, torus_holefill, moments_matched_pair.
    pub kind: String,

    #[arg(long, value_parser = clap::value_parser!(u64).range(10..))]
    pub n: u64,

    /// Dimension for blob and clusters.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    pub d: u32,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output path. Pairs are written to `<stem>_a.<ext>` and `<stem>_b.<ext>`.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub kind: BaselineKind,
    pub a: PathBuf,
    pub b: PathBuf,

    #[command(flatten)]
    pub input_args: InputArgs,
}
