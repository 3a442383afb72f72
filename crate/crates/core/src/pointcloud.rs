//! Point cloud ingestion and persistence.
//!
//! Two on-disk formats are supported:
//!
//! * CSV: comma-separated decimal values, one sample per line, with an
//!   optional single header line.
//! * IMDM: the magic bytes `IMDM`, a little-endian `u32` version (1), `u64`
//!   row count, `u64` column count, then `n * d` little-endian `f64` values in
//!   row-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{ImdError, Result};
use crate::rng::SplitMix64;

pub const IMDM_MAGIC: &[u8; 4] = b"IMDM";
pub const IMDM_VERSION: u32 = 1;
const IMDM_HEADER_LEN: usize = 4 + 4 + 8 + 8;

/// An `n x d` matrix of samples stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl PointCloud {
    /// Builds a validated point cloud from row-major data.
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(ImdError::EmptyInput);
        }
        if data.len() != n * d {
            return Err(ImdError::InvalidParameter(format!(
                "data length {} does not match {n} x {d}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(ImdError::NonFiniteValue {
                row: pos / d,
                column: pos % d,
            });
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(ImdError::Parse {
                    line: i + 1,
                    message: format!("expected {d} columns, found {}", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), d, data)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Rows selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.d, data)
    }

    /// Applies `f` to every row, producing a cloud of dimension `d_out`.
    pub fn map_rows(&self, d_out: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Result<Self> {
        let mut data = vec![0.0; self.n * d_out];
        for (src, dst) in self.rows().zip(data.chunks_exact_mut(d_out)) {
            f(src, dst);
        }
        Self::new(self.n, d_out, data)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Imdm,
    Auto,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CsvOptions {
    /// Skip the first line.
    pub header: bool,
}

/// Parses CSV text. Blank lines are ignored.
pub fn parse_csv(text: &str, opts: CsvOptions) -> Result<PointCloud> {
    let mut data = Vec::new();
    let mut d = 0usize;
    let mut n = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if opts.header && lineno == 0 {
            continue;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let start = data.len();
        for (col, field) in line.split(',').enumerate() {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| ImdError::Parse {
                line: lineno + 1,
                message: format!("column {col}: cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(ImdError::NonFiniteValue { row: n, column: col });
            }
            data.push(v);
        }
        let width = data.len() - start;
        if n == 0 {
            d = width;
        } else if width != d {
            return Err(ImdError::Parse {
                line: lineno + 1,
                message: format!("expected {d} columns, found {width}"),
            });
        }
        n += 1;
    }
    if n == 0 {
        return Err(ImdError::EmptyInput);
    }
    PointCloud::new(n, d, data)
}

/// Parses an IMDM byte buffer.
pub fn parse_imdm(bytes: &[u8]) -> Result<PointCloud> {
    let bad = |message: &str| ImdError::Parse {
        line: 0,
        message: message.to_string(),
    };
    if bytes.len() < IMDM_HEADER_LEN || &bytes[..4] != IMDM_MAGIC {
        return Err(bad("missing IMDM header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != IMDM_VERSION {
        return Err(bad(&format!("unsupported IMDM version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let d = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    if n == 0 || d == 0 {
        return Err(ImdError::EmptyInput);
    }
    let expected = n
        .checked_mul(d)
        .and_then(|x| x.checked_mul(8))
        .ok_or_else(|| bad("IMDM dimensions overflow"))?;
    let payload = &bytes[IMDM_HEADER_LEN..];
    if payload.len() != expected {
        return Err(bad(&format!(
            "IMDM payload has {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PointCloud::new(n, d, data)
}

pub fn encode_imdm(pc: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(IMDM_HEADER_LEN + pc.data.len() * 8);
    out.extend_from_slice(IMDM_MAGIC);
    out.extend_from_slice(&IMDM_VERSION.to_le_bytes());
    out.extend_from_slice(&(pc.n as u64).to_le_bytes());
    out.extend_from_slice(&(pc.d as u64).to_le_bytes());
    for v in &pc.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// CSV text using shortest round-trip float formatting.
pub fn encode_csv(pc: &PointCloud) -> String {
    let mut out = String::with_capacity(pc.data.len() * 20);
    for row in pc.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            // `{:?}` is the shortest representation that parses back exactly.
            out.push_str(&format!("{v:?}"));
        }
        out.push('\n');
    }
    out
}

/// Decodes bytes in the given format. `Auto` checks the magic bytes, then
/// the extension hint, then falls back to CSV.
pub fn decode(bytes: &[u8], format: Format, ext_hint: Option<&str>, csv: CsvOptions) -> Result<PointCloud> {
    let format = match format {
        Format::Auto => {
            if bytes.starts_with(IMDM_MAGIC) {
                Format::Imdm
            } else if ext_hint.is_some_and(|e| e.eq_ignore_ascii_case("imdm")) {
                Format::Imdm
            } else {
                Format::Csv
            }
        }
        f => f,
    };
    match format {
        Format::Imdm => parse_imdm(bytes),
        _ => {
            let text = std::str::from_utf8(bytes).map_err(|e| ImdError::Parse {
                line: 0,
                message: format!("input is not UTF-8: {e}"),
            })?;
            parse_csv(text, csv)
        }
    }
}

/// Loads a point cloud from `path`, or from stdin when `path` is `-`.
pub fn load_pointcloud(path: &Path, format: Format, csv: CsvOptions) -> Result<PointCloud> {
    let bytes = if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| ImdError::io(path, e))?;
        buf
    } else {
        fs::read(path).map_err(|e| ImdError::io(path, e))?
    };
    let ext = path.extension().and_then(|e| e.to_str());
    decode(&bytes, format, ext, csv)
}

/// Writes `pc` to `path`. `Auto` picks IMDM for a `.imdm` extension and CSV
/// otherwise.
pub fn save_pointcloud(pc: &PointCloud, path: &Path, format: Format) -> Result<()> {
    let format = match format {
        Format::Auto => match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("imdm") => Format::Imdm,
            _ => Format::Csv,
        },
        f => f,
    };
    let bytes = match format {
        Format::Imdm => encode_imdm(pc),
        _ => encode_csv(pc).into_bytes(),
    };
    let mut f = fs::File::create(path).map_err(|e| ImdError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| ImdError::io(path, e))
}

/// Draws `m` rows uniformly without replacement.
///
/// Partial Fisher-Yates shuffle driven by a SplitMix64 stream seeded with
/// `seed`; step `i` swaps position `i` with `i + below(n - i)`.
pub fn subsample(pc: &PointCloud, m: usize, seed: u64) -> Result<PointCloud> {
    let idx = subsample_indices(pc.n, m, seed)?;
    pc.select(&idx)
}

pub fn subsample_indices(n: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m > n {
        return Err(ImdError::SampleTooLarge {
            requested: m,
            available: n,
        });
    }
    if m == 0 {
        return Err(ImdError::EmptyInput);
    }
    let mut rng = SplitMix64::new(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + rng.below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(m);
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_simple_csv() {
        let pc = parse_csv("0,0\n1,0\n0,1", CsvOptions::default()).unwrap();
        assert_eq!((pc.n(), pc.d()), (3, 2));
        assert_eq!(pc.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn csv_header_is_skipped_only_when_asked() {
        let text = "x,y\n1,2\n";
        assert!(matches!(
            parse_csv(text, CsvOptions::default()),
            Err(ImdError::Parse { line: 1, .. })
        ));
        let pc = parse_csv(text, CsvOptions { header: true }).unwrap();
        assert_eq!(pc.n(), 1);
    }

    #[test]
    fn csv_nan_is_rejected_with_position() {
        let err = parse_csv("1,2\n3,nan\n", CsvOptions::default()).unwrap_err();
        assert!(matches!(err, ImdError::NonFiniteValue { row: 1, column: 1 }));
        let err = parse_csv("inf,2\n", CsvOptions::default()).unwrap_err();
        assert!(matches!(err, ImdError::NonFiniteValue { row: 0, column: 0 }));
    }

    #[test]
    fn csv_ragged_rows_are_rejected() {
        let err = parse_csv("1,2\n3\n", CsvOptions::default()).unwrap_err();
        assert!(matches!(err, ImdError::Parse { line: 2, .. }));
    }

    #[test]
    fn empty_csv_is_rejected() {
        assert!(matches!(
            parse_csv("\n\n", CsvOptions::default()),
            Err(ImdError::EmptyInput)
        ));
    }

    #[test]
    fn imdm_two_by_three() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"IMDM");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&3u64.to_le_bytes());
        for v in [1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let pc = decode(&bytes, Format::Auto, None, CsvOptions::default()).unwrap();
        assert_eq!((pc.n(), pc.d()), (2, 3));
        assert_eq!(pc.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(encode_imdm(&pc), bytes);
    }

    #[test]
    fn imdm_truncated_payload_is_rejected() {
        let pc = PointCloud::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let bytes = encode_imdm(&pc);
        assert!(parse_imdm(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn subsample_rejects_oversized_request() {
        let pc = PointCloud::new(10, 1, (0..10).map(f64::from).collect()).unwrap();
        assert!(matches!(
            subsample(&pc, 11, 1),
            Err(ImdError::SampleTooLarge { requested: 11, available: 10 })
        ));
    }

    #[test]
    fn full_subsample_is_a_permutation() {
        let pc = PointCloud::new(5, 1, (0..5).map(f64::from).collect()).unwrap();
        let s = subsample(&pc, 5, 99).unwrap();
        let mut v = s.into_vec();
        v.sort_by(f64::total_cmp);
        assert_eq!(v, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn subsample_is_deterministic() {
        let pc = PointCloud::new(1000, 2, (0..2000).map(f64::from).collect()).unwrap();
        let a = subsample(&pc, 100, 7).unwrap();
        let b = subsample(&pc, 100, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, subsample(&pc, 100, 8).unwrap());
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
            -1e3f64..1e3,
        ]
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(n in 1usize..8, d in 1usize..5, seed in any::<u64>()) {
            let mut rng = SplitMix64::new(seed);
            let data: Vec<f64> = (0..n * d)
                .map(|_| f64::from_bits(rng.next_u64()))
                .map(|v| if v.is_finite() { v } else { 0.5 })
                .collect();
            let pc = PointCloud::new(n, d, data).unwrap();
            let from_bin = parse_imdm(&encode_imdm(&pc)).unwrap();
            let from_csv = parse_csv(&encode_csv(&pc), CsvOptions::default()).unwrap();
            for (a, b) in pc.as_slice().iter().zip(from_bin.as_slice()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            for (a, b) in pc.as_slice().iter().zip(from_csv.as_slice()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn csv_roundtrip_of_ordinary_values(vals in proptest::collection::vec(finite(), 1..30)) {
            let pc = PointCloud::new(vals.len(), 1, vals).unwrap();
            let back = parse_csv(&encode_csv(&pc), CsvOptions::default()).unwrap();
            prop_assert_eq!(pc, back);
        }
    }
}
