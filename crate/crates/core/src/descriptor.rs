//! Heat trace descriptors and their JSON form.
//!
//! A descriptor is the sampled heat kernel trace of one point cloud plus the
//! parameters that produced it, so it can be stored and compared later.
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{ImdError, Result};
use crate::knn::KnnMode;
use crate::slq::{ProbeDistribution, SlqParams, TemperatureGrid, VarianceReduction};

pub const DESCRIPTOR_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = concat!("imd ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatTraceDescriptor {
    pub version: u32,
    pub n: usize,
    pub k: Option<usize>,
    pub knn_mode: Option<KnnMode>,
    pub m: usize,
    pub nv: usize,
    pub probe: ProbeDistribution,
    pub vr: VarianceReduction,
    pub seed: u64,
    pub grid: TemperatureGrid,
    pub hkt: Vec<f64>,
    pub exact: bool,
    pub normalized: bool,
    pub created_with: String,
    /// Hash of the source data and flags, set when the descriptor is cached
    /// beside its input file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_hash: Option<String>,
}

impl HeatTraceDescriptor {
    pub(crate) fn from_slq(n: usize, grid: TemperatureGrid, hkt: Vec<f64>, p: &SlqParams) -> Self {
        Self {
            version: DESCRIPTOR_VERSION,
            n,
            k: None,
            knn_mode: None,
            m: p.lanczos_steps,
            nv: p.probes,
            probe: p.probe_distribution,
            vr: p.variance_reduction,
            seed: p.seed,
            grid,
            hkt,
            exact: false,
            normalized: false,
            created_with: TOOL_VERSION.to_string(),
            source_hash: None,
        }
    }

    pub(crate) fn from_exact(n: usize, grid: TemperatureGrid, hkt: Vec<f64>) -> Self {
        Self {
            m: 0,
            nv: 0,
            vr: VarianceReduction::Off,
            exact: true,
            ..Self::from_slq(n, grid, hkt, &SlqParams::default())
        }
    }

    /// Structural checks applied on load.
    pub fn validate(&self) -> Result<()> {
        if self.version != DESCRIPTOR_VERSION {
            return Err(ImdError::VersionMismatch {
                found: self.version,
                expected: DESCRIPTOR_VERSION,
            });
        }
        if self.hkt.len() != self.grid.len() {
            return Err(ImdError::Schema(format!(
                "hkt has {} values for a grid of {}",
                self.hkt.len(),
                self.grid.len()
            )));
        }
        if self.n == 0 {
            return Err(ImdError::Schema("n must be positive".into()));
        }
        if self.hkt.iter().any(|v| !v.is_finite()) {
            return Err(ImdError::Schema("hkt contains non-finite values".into()));
        }
        Ok(())
    }

    /// Spectral sanity of an unnormalized descriptor: values positive, at
    /// most `n`, and non-increasing in `t`. SLQ descriptors get a slack of
    /// `1e-6 * n`; oracle descriptors none.
    pub fn check_spectral_invariants(&self) -> std::result::Result<(), String> {
        let tol = if self.exact { 0.0 } else { 1e-6 * self.n as f64 };
        let n = self.n as f64;
        for (j, &h) in self.hkt.iter().enumerate() {
            if h <= 0.0 {
                return Err(format!("hkt[{j}] = {h} is not positive"));
            }
            if !self.normalized && h > n + tol {
                return Err(format!("hkt[{j}] = {h} exceeds n = {n}"));
            }
        }
        for (j, w) in self.hkt.windows(2).enumerate() {
            if w[1] > w[0] + tol {
                return Err(format!("hkt increases between grid points {j} and {}", j + 1));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits::default());
        self.serialize(&mut ser).expect("descriptor serialization cannot fail");
        buf.push(b'\n');
        String::from_utf8(buf).expect("JSON output is UTF-8")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text).map_err(|e| {
            // Surface version problems ahead of other schema issues.
            if let Ok(v) = serde_json::from_str::<serde_json::Value>(text) {
                if let Some(found) = v.get("version").and_then(|x| x.as_u64()) {
                    if found != DESCRIPTOR_VERSION as u64 {
                        return ImdError::VersionMismatch {
                            found: found as u32,
                            expected: DESCRIPTOR_VERSION,
                        };
                    }
                }
            }
            ImdError::Schema(e.to_string())
        })?;
        d.validate()?;
        Ok(d)
    }
}

pub fn save_descriptor(desc: &HeatTraceDescriptor, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| ImdError::io(path, e))?;
    f.write_all(desc.to_json().as_bytes())
        .map_err(|e| ImdError::io(path, e))
}

pub fn load_descriptor(path: &Path) -> Result<HeatTraceDescriptor> {
    let text = fs::read_to_string(path).map_err(|e| ImdError::io(path, e))?;
    HeatTraceDescriptor::from_json(&text)
}

/// Pretty JSON with every float written as `{:.16e}`.
#[derive(Default)]
struct SignificantDigits<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for SignificantDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}
