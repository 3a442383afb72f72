use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use imd_core::pointcloud::decode;
use imd_core::stats::ConfidenceInterval;
use imd_core::{
    baselines, describe, er_normalize, heat_trace, imdist, save_descriptor, subsample, synth,
    DescriptorConfig, HeatTraceDescriptor, ImdReport, KnnMode, PointCloud,
};
use sha2::{Digest, Sha256};

use crate::args::{BaselineArgs, BaselineKind, DescArgs, DescriptorArgs, DistArgs, InputArgs, NormalizeArg, SynthArgs};
use crate::fail::{CliError, CliResult};

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut std::io::stdin(), &mut buf)
            .map_err(|e| CliError::io(format!("reading stdin: {e}")))?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))
    }
}

fn parse_points(bytes: &[u8], path: &Path, input: &InputArgs) -> CliResult<PointCloud> {
    let ext = path.extension().and_then(|e| e.to_str());
    Ok(decode(bytes, input.format(), ext, input.csv())?)
}

fn write_stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(format!("writing stdout: {e}")))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))
}

pub fn desc(args: &DescArgs) -> CliResult<()> {
    let cfg = args.descriptor.config()?;
    let bytes = read_input(&args.input)?;
    let mut pc = parse_points(&bytes, &args.input, &args.input_args)?;
    if let Some(m) = args.subsample {
        pc = subsample(&pc, m, cfg.slq.seed)?;
    }
    let start = Instant::now();
    let d = describe(&pc, &cfg)?;
    eprintln!(
        "n={} d={} k={} components={} time={:.3}s",
        pc.n(),
        pc.d(),
        cfg.k,
        d.laplacian.component_count(),
        start.elapsed().as_secs_f64()
    );
    if let Some(path) = &args.dump_graph {
        d.graph.write_edge_list(path)?;
    }
    match &args.output {
        Some(path) => save_descriptor(&d.descriptor, path)?,
        None => write_stdout(&d.descriptor.to_json())?,
    }
    Ok(())
}

fn looks_like_json(bytes: &[u8]) -> bool {
    bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{')
}

/// `<dir>/<stem>.imd.json` beside a point file.
pub fn cache_path(input: &Path) -> Option<PathBuf> {
    if input.as_os_str() == "-" {
        return None;
    }
    let stem = input.file_stem()?.to_str()?;
    Some(input.with_file_name(format!("{stem}.imd.json")))
}

fn source_hash(bytes: &[u8], input: &InputArgs, flags: &DescriptorArgs) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.update([0u8]);
    h.update(format!("format={:?} header={} {}", input.format, input.header, flags.fingerprint()));
    format!("{:x}", h.finalize())
}

/// Loads a descriptor file, or describes a point file (through the cache
/// unless disabled).
fn obtain_descriptor(path: &Path, args: &DistArgs, cfg: &DescriptorConfig) -> CliResult<HeatTraceDescriptor> {
    let bytes = read_input(path)?;
    if looks_like_json(&bytes) {
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        return Ok(HeatTraceDescriptor::from_json(text)?);
    }
    let hash = source_hash(&bytes, &args.input_args, &args.descriptor);
    let cache = cache_path(path).filter(|_| !args.no_cache);
    if let Some(cp) = &cache {
        if let Ok(text) = fs::read_to_string(cp) {
            match HeatTraceDescriptor::from_json(&text) {
                Ok(d) if d.source_hash.as_deref() == Some(hash.as_str()) => {
                    log::info!("using cached descriptor {}", cp.display());
                    return Ok(d);
                }
                Ok(_) => log::info!("stale cache {}", cp.display()),
                Err(e) => log::warn!("ignoring unreadable cache {}: {e}", cp.display()),
            }
        }
    }
    let pc = parse_points(&bytes, path, &args.input_args)?;
    let mut d = describe(&pc, cfg)?.descriptor;
    d.source_hash = Some(hash);
    if let Some(cp) = &cache {
        if let Err(e) = save_descriptor(&d, cp) {
            log::warn!("could not write cache {}: {e}", cp.display());
        }
    }
    Ok(d)
}

fn maybe_normalize(d: HeatTraceDescriptor, args: &DistArgs) -> CliResult<HeatTraceDescriptor> {
    match args.normalize {
        None => Ok(d),
        Some(NormalizeArg::Er) => {
            let degree = match args.null_degree.or(d.k.map(|k| k as f64)) {
                Some(k) => k,
                None => return Err(CliError::usage("--normalize er needs --null-degree for descriptors without k")),
            };
            Ok(er_normalize(&d, degree)?)
        }
    }
}

fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn dist(args: &DistArgs) -> CliResult<()> {
    let cfg = args.descriptor.config()?;
    if let Some(runs) = args.repeat {
        return dist_repeat(args, &cfg, runs as usize);
    }
    let a = maybe_normalize(obtain_descriptor(&args.a, args, &cfg)?, args)?;
    let b = maybe_normalize(obtain_descriptor(&args.b, args, &cfg)?, args)?;
    let report = imdist(&a, &b)?;
    if let Some((na, nb)) = report.n_mismatch {
        eprintln!("warning: sample counts differ ({na} vs {nb})");
    }
    if let Some(path) = &args.curve {
        write_file(path, &curve_csv(&report))?;
    }
    if args.json {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        write_stdout(&format!("{text}\n"))
    } else {
        write_stdout(&format!("{}\n", format_number(report.distance)))
    }
}

fn curve_csv(r: &ImdReport) -> String {
    let mut s = String::from("t,weighted_gap\n");
    for (t, c) in r.grid.values().iter().zip(&r.curve) {
        s.push_str(&format!("{t:?},{c:?}\n"));
    }
    s
}

/// Repeated runs with seeds `seed, seed + 1, ...`. Exact kNN graphs do not
/// depend on the seed and are built once.
fn dist_repeat(args: &DistArgs, cfg: &DescriptorConfig, runs: usize) -> CliResult<()> {
    if !(args.ci > 0.0 && args.ci < 1.0) {
        return Err(CliError::usage(format!("--ci must be in (0, 1), got {}", args.ci)));
    }
    let mut clouds = Vec::new();
    for path in [&args.a, &args.b] {
        let bytes = read_input(path)?;
        if looks_like_json(&bytes) {
            return Err(CliError::usage("--repeat needs point files, not descriptors"));
        }
        clouds.push(parse_points(&bytes, path, &args.input_args)?);
    }
    let reuse_graph = cfg.knn_mode == KnnMode::Exact && cfg.oracle_cap.is_none();
    let fixed = if reuse_graph {
        Some(
            clouds
                .iter()
                .map(|pc| describe(pc, cfg).map(|d| d.laplacian))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };
    let mut values = Vec::with_capacity(runs);
    for i in 0..runs {
        let run_cfg = cfg.clone().with_seed(cfg.slq.seed.wrapping_add(i as u64));
        let descs = match &fixed {
            Some(laps) => laps
                .iter()
                .map(|l| {
                    let mut d = heat_trace(l, &run_cfg.grid, &run_cfg.slq)?;
                    d.k = Some(run_cfg.k);
                    d.knn_mode = Some(run_cfg.knn_mode);
                    Ok(d)
                })
                .collect::<imd_core::Result<Vec<_>>>()?,
            None => clouds
                .iter()
                .map(|pc| describe(pc, &run_cfg).map(|d| d.descriptor))
                .collect::<imd_core::Result<Vec<_>>>()?,
        };
        let mut descs = descs.into_iter().map(|d| maybe_normalize(d, args));
        let a = descs.next().expect("two descriptors")?;
        let b = descs.next().expect("two descriptors")?;
        values.push(imdist(&a, &b)?.distance);
    }
    let ci = ConfidenceInterval::of(&values, args.ci);
    write_stdout(&format!(
        "{} ± {} ({}% CI, {} runs)\n",
        format_number(ci.mean),
        format_number(ci.half_width),
        args.ci * 100.0,
        runs
    ))
}

fn pair_path(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{tag}.{ext}"),
        None => format!("{stem}_{tag}"),
    };
    path.with_file_name(name)
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let clouds = synth::generate(&args.kind, args.n as usize, args.d as usize, args.seed)?;
    let paths = if clouds.len() == 1 {
        vec![args.output.clone()]
    } else {
        vec![pair_path(&args.output, "a"), pair_path(&args.output, "b")]
    };
    for (pc, path) in clouds.iter().zip(&paths) {
        imd_core::save_pointcloud(pc, path, imd_core::pointcloud::Format::Auto)?;
        eprintln!("wrote {} ({} x {})", path.display(), pc.n(), pc.d());
    }
    Ok(())
}

pub fn baseline(args: &BaselineArgs) -> CliResult<()> {
    let a = parse_points(&read_input(&args.a)?, &args.a, &args.input_args)?;
    let b = parse_points(&read_input(&args.b)?, &args.b, &args.input_args)?;
    let v = match args.kind {
        BaselineKind::Fid => baselines::fid(&a, &b)?,
        BaselineKind::Kid => baselines::kid(&a, &b)?,
    };
    write_stdout(&format!("{}\n", format_number(v)))
}
