//! Command-line front end: reproducible CSV/JSON emitters for the bound
//! curves, excess-rate experiments, concentration statistics, and lattice
//! utilities.
//!
//! Every run is a pure function of its arguments (including `--seed`), so a
//! repeated invocation produces byte-identical payloads. When `--out` is
//! given, the payload is written atomically and a `<out>.manifest.json`
//! sidecar records the argv, seed, version, wall time, and payload checksum;
//! `exrate rerun --manifest <file>` re-executes the recorded argv and fails
//! if the payload checksum changed.

use crate::asymptotics::{self, ConcentrationVariant};
use crate::bounds::{self, nats_to_bits};
use crate::lattice::{Lattice, LatticeFamily};
use crate::mc::mix_seed;
use crate::quantizer::{QuantizerFamily, QuantizerSpec};
use crate::sources::SourceModel;
use crate::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "exrate", version, about = "Excess-rate bounds and quantizer experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Base RNG seed for all Monte Carlo estimates.
    #[arg(long, global = true, env = "EXRATE_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Monte Carlo sample count per estimate.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub samples: usize,

    /// Write the payload to this path (stdout if omitted); a
    /// `.manifest.json` sidecar is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-dimension excess-rate bounds and lattice achievability points.
    Figure1 {
        /// Dimension sweep: `1..24` (inclusive) or a comma list like `1,2,8`.
        #[arg(long, default_value = "1..24")]
        dims: String,
        /// Comma list of lattice families: Z, D, Dstar, A, E8.
        #[arg(long, default_value = "Z,A,D,Dstar,E8")]
        lattices: String,
    },
    /// Excess of exact quantizer entropy over the reference rate, per
    /// distortion.
    Excess {
        #[arg(long)]
        source: String,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Strictly decreasing comma list of target distortions.
        #[arg(long, default_value = "1e-2,1e-3,1e-4,1e-5")]
        distortions: String,
        /// `uniform` or `pattern:1,2`.
        #[arg(long, default_value = "uniform")]
        family: String,
    },
    /// Concentration mass of the cell-window statistic, per distortion.
    Concentration {
        #[arg(long)]
        source: String,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long, default_value = "1e-2,1e-3,1e-4")]
        distortions: String,
        #[arg(long, default_value_t = 10.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value = "uniform")]
        family: String,
        /// `theorem2_lambda` or `corollary_delta`.
        #[arg(long, default_value = "theorem2_lambda")]
        variant: String,
    },
    /// Lattice utilities.
    Lattice {
        #[command(subcommand)]
        cmd: LatticeCmd,
    },
    /// Evaluate one named quantizer on a source.
    Evaluate {
        /// `uniform:Δ[,offset]`, `pattern:1,2@Δ`, or `lattice:E8@α`.
        #[arg(long)]
        quantizer: String,
        #[arg(long)]
        source: String,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// `exact` (scalar quantizers) or `mc`.
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// Re-execute a recorded manifest and verify the payload checksum.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum LatticeCmd {
    /// Decode one point: prints the nearest lattice point.
    Decode { lattice: String, point: String },
    /// Monte Carlo estimate of the normalized r-th Voronoi moment.
    Moment {
        lattice: String,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
    },
}

/// Payload plus diagnostics of one command execution.
#[derive(Debug)]
pub struct Execution {
    pub payload: String,
    pub warnings: Vec<String>,
    /// True when some rows failed (maps to the nonconvergence exit code).
    pub partial: bool,
}

/// Sidecar metadata; re-running `argv` must reproduce `sha256`.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub argv: Vec<String>,
    pub seed: u64,
    pub samples: usize,
    pub version: String,
    pub wall_time_s: f64,
    pub payload_sha256: String,
    pub payload_bytes: usize,
    pub out: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Entry point used by `main` and by the integration tests.
///
/// Returns the process exit code: 0 success, 2 validation error,
/// 3 numerical nonconvergence (including partial results).
pub fn main_from_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (help/version go to stdout).
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let started = std::time::Instant::now();
    match execute(&cli) {
        Ok(exec) => {
            for w in &exec.warnings {
                eprintln!("warning: {w}");
            }
            if let Err(e) = deliver(&cli, &argv, &exec, started.elapsed().as_secs_f64()) {
                eprintln!("error: {e}");
                return 2;
            }
            if exec.partial {
                3
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Nonconvergent(_) => 3,
                _ => 2,
            }
        }
    }
}

fn deliver(cli: &Cli, argv: &[String], exec: &Execution, wall_time_s: f64) -> Result<()> {
    match &cli.out {
        None => {
            print!("{}", exec.payload);
            Ok(())
        }
        Some(path) => {
            write_atomic(path, exec.payload.as_bytes())?;
            let manifest = RunManifest {
                argv: argv.to_vec(),
                seed: cli.seed,
                samples: cli.samples,
                version: env!("CARGO_PKG_VERSION").to_string(),
                wall_time_s,
                payload_sha256: sha256_hex(exec.payload.as_bytes()),
                payload_bytes: exec.payload.len(),
                out: Some(path.display().to_string()),
            };
            let mpath = manifest_path(path);
            let body = serde_json::to_string_pretty(&manifest)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            write_atomic(&mpath, body.as_bytes())
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp{}",
            path.file_name().unwrap_or_default().to_string_lossy(),
            std::process::id()
        )),
        None => PathBuf::from(format!(".exrate.tmp{}", std::process::id())),
    };
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs the command and renders the payload; pure given the arguments.
pub fn execute(cli: &Cli) -> Result<Execution> {
    match &cli.command {
        Command::Figure1 { dims, lattices } => figure1(cli, dims, lattices),
        Command::Excess { source, r, distortions, family } => {
            excess(cli, source, *r, distortions, family)
        }
        Command::Concentration { source, r, distortions, rho, theta, family, variant } => {
            concentration(cli, source, *r, distortions, *rho, *theta, family, variant)
        }
        Command::Lattice { cmd } => match cmd {
            LatticeCmd::Decode { lattice, point } => decode(cli, lattice, point),
            LatticeCmd::Moment { lattice, r } => moment(cli, lattice, *r),
        },
        Command::Evaluate { quantizer, source, r, mode } => {
            evaluate(cli, quantizer, source, *r, mode)
        }
        Command::Rerun { manifest } => rerun(manifest),
    }
}

fn parse_dims(s: &str) -> Result<Vec<u32>> {
    let err = || Error::Parse(format!("bad dimension list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let lo: u32 = a.trim().parse().map_err(|_| err())?;
        let hi: u32 = b.trim().parse().map_err(|_| err())?;
        if lo == 0 || hi < lo {
            return Err(err());
        }
        return Ok((lo..=hi).collect());
    }
    let dims: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err())?;
    if dims.is_empty() || dims.contains(&0) {
        return Err(err());
    }
    Ok(dims)
}

fn parse_distortions(s: &str) -> Result<Vec<f64>> {
    let list: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("bad distortion list '{s}'")))?;
    Ok(list)
}

fn parse_lattice_families(s: &str) -> Result<Vec<(String, LatticeFamily)>> {
    s.split(',')
        .map(|name| {
            let name = name.trim();
            let family = match name {
                "Z" => LatticeFamily::Z,
                "D" => LatticeFamily::D,
                "Dstar" => LatticeFamily::DStar,
                "A" => LatticeFamily::A,
                "E8" => LatticeFamily::E8,
                _ => return Err(Error::Parse(format!("unknown lattice family '{name}'"))),
            };
            Ok((name.to_string(), family))
        })
        .collect()
}

#[derive(serde::Serialize)]
struct Figure1Row {
    d: u32,
    lb_bits_per_dim: f64,
    zador_ub_bits_per_dim: f64,
    lattice: String,
    lattice_ub_bits_per_dim: Option<f64>,
    moment_source: Option<String>,
    moment_std_err: Option<f64>,
}

fn figure1(cli: &Cli, dims: &str, lattices: &str) -> Result<Execution> {
    let dims = parse_dims(dims)?;
    let families = parse_lattice_families(lattices)?;
    let mut warnings = Vec::new();
    let jobs: Vec<(u32, String, LatticeFamily)> = dims
        .iter()
        .flat_map(|&d| families.iter().map(move |(n, f)| (d, n.clone(), *f)))
        .collect();
    let rows: Vec<(Figure1Row, Option<String>)> = jobs
        .into_par_iter()
        .map(|(d, name, family)| {
            let lb = nats_to_bits(bounds::excess_rate_lb_per_dim_quadratic(d));
            let zador = nats_to_bits(bounds::zador_rc_ub_per_dim(d));
            let mut row = Figure1Row {
                d,
                lb_bits_per_dim: lb,
                zador_ub_bits_per_dim: zador,
                lattice: format!("{name}:{d}"),
                lattice_ub_bits_per_dim: None,
                moment_source: None,
                moment_std_err: None,
            };
            let warning = match Lattice::new(family, d as usize, 1.0) {
                Err(e) => Some(format!("{name}:{d}: {e}")),
                Ok(lat) => {
                    if let Some(ell) = lat.analytic_ell_r2() {
                        row.lattice_ub_bits_per_dim =
                            Some(nats_to_bits(bounds::tessellating_excess(ell, d, 2.0) / d as f64));
                        row.moment_source = Some("analytic".into());
                        row.moment_std_err = Some(0.0);
                        None
                    } else {
                        let seed =
                            mix_seed(cli.seed, fnv1a(format!("{name}:{d}").as_bytes()));
                        match lat.normalized_moment_mc(2.0, cli.samples, seed) {
                            Ok(est) => {
                                row.lattice_ub_bits_per_dim = Some(nats_to_bits(
                                    bounds::tessellating_excess(est.ell, d, 2.0) / d as f64,
                                ));
                                row.moment_source = Some("mc".into());
                                row.moment_std_err = Some(est.std_error);
                                None
                            }
                            Err(e) => Some(format!("{name}:{d}: {e}")),
                        }
                    }
                }
            };
            (row, warning)
        })
        .collect();
    let mut out_rows = Vec::with_capacity(rows.len());
    for (row, warning) in rows {
        if let Some(w) = warning {
            warnings.push(w);
        }
        out_rows.push(row);
    }
    let payload = match cli.format {
        OutputFormat::Json => to_json(&out_rows)?,
        OutputFormat::Csv => {
            let mut s = String::from(
                "d,lb_bits_per_dim,zador_ub_bits_per_dim,lattice,lattice_ub_bits_per_dim,moment_source,moment_std_err\n",
            );
            for r in &out_rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.d,
                    r.lb_bits_per_dim,
                    r.zador_ub_bits_per_dim,
                    r.lattice,
                    opt(r.lattice_ub_bits_per_dim),
                    r.moment_source.as_deref().unwrap_or(""),
                    opt(r.moment_std_err),
                );
            }
            s
        }
    };
    Ok(Execution { payload, warnings, partial: false })
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_json<T: serde::Serialize>(rows: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(rows)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(serde::Serialize)]
struct ExcessRow {
    #[serde(rename = "D")]
    d: f64,
    #[serde(rename = "achieved_D")]
    achieved_d: f64,
    entropy_nats: f64,
    reference_nats: f64,
    excess_bits: f64,
}

fn excess(cli: &Cli, source: &str, r: f64, distortions: &str, family: &str) -> Result<Execution> {
    let source: SourceModel = source.parse()?;
    let family: QuantizerFamily = family.parse()?;
    let d_list = parse_distortions(distortions)?;
    let curve = asymptotics::excess_rate_curve(&source, r, &d_list, &family)?;
    let warnings: Vec<String> = curve
        .failures
        .iter()
        .map(|(d, e)| format!("calibration failed at D={d}: {e}"))
        .collect();
    let rows: Vec<ExcessRow> = curve
        .points
        .iter()
        .map(|p| ExcessRow {
            d: p.target_d,
            achieved_d: p.achieved_d,
            entropy_nats: p.entropy_nats,
            reference_nats: p.reference_nats,
            excess_bits: nats_to_bits(p.excess_nats),
        })
        .collect();
    let payload = match cli.format {
        OutputFormat::Json => to_json(&rows)?,
        OutputFormat::Csv => {
            let mut s = String::from("D,achieved_D,entropy_nats,reference_nats,excess_bits\n");
            for row in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    row.d, row.achieved_d, row.entropy_nats, row.reference_nats, row.excess_bits
                );
            }
            s
        }
    };
    Ok(Execution { payload, warnings, partial: curve.is_partial() })
}

#[derive(serde::Serialize)]
struct ConcentrationRow {
    #[serde(rename = "D")]
    d: f64,
    rho: f64,
    theta: f64,
    variant: String,
    mass: f64,
    tail_mass: f64,
}

#[allow(clippy::too_many_arguments)]
fn concentration(
    cli: &Cli,
    source: &str,
    r: f64,
    distortions: &str,
    rho: f64,
    theta: f64,
    family: &str,
    variant: &str,
) -> Result<Execution> {
    let source: SourceModel = source.parse()?;
    let family: QuantizerFamily = family.parse()?;
    let variant = ConcentrationVariant::from_str(variant)?;
    let d_list = parse_distortions(distortions)?;
    let results: Vec<std::result::Result<ConcentrationRow, (f64, String)>> = d_list
        .par_iter()
        .map(|&target| {
            let cal =
                family.calibrate(&source, r, target).map_err(|e| (target, e.to_string()))?;
            let res = asymptotics::concentration_statistic(
                &cal.quantizer,
                &source,
                r,
                cal.achieved,
                rho,
                theta,
                variant,
            )
            .map_err(|e| (target, e.to_string()))?;
            Ok(ConcentrationRow {
                d: target,
                rho,
                theta,
                variant: variant.to_string(),
                mass: res.mass,
                tail_mass: res.tail_mass,
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for res in results {
        match res {
            Ok(r) => rows.push(r),
            Err((d, e)) => warnings.push(format!("D={d}: {e}")),
        }
    }
    let partial = !warnings.is_empty();
    let payload = match cli.format {
        OutputFormat::Json => to_json(&rows)?,
        OutputFormat::Csv => {
            let mut s = String::from("D,rho,theta,variant,mass,tail_mass\n");
            for row in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    row.d, row.rho, row.theta, row.variant, row.mass, row.tail_mass
                );
            }
            s
        }
    };
    Ok(Execution { payload, warnings, partial })
}

fn decode(cli: &Cli, lattice: &str, point: &str) -> Result<Execution> {
    let lat: Lattice = lattice.parse()?;
    let x: Vec<f64> = point
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("bad point '{point}'")))?;
    let (nearest, projected) = lat.nearest_point_detail(&x)?;
    let mut warnings = Vec::new();
    if projected {
        warnings.push("input was projected onto the sum-zero hyperplane".into());
    }
    let payload = match cli.format {
        OutputFormat::Json => to_json(&nearest)?,
        OutputFormat::Csv => {
            let parts: Vec<String> = nearest.iter().map(|v| v.to_string()).collect();
            format!("{}\n", parts.join(","))
        }
    };
    Ok(Execution { payload, warnings, partial: false })
}

#[derive(serde::Serialize)]
struct MomentRow {
    lattice: String,
    d: usize,
    r: f64,
    ell: f64,
    #[serde(rename = "per_dim_G")]
    per_dim_g: f64,
    std_error: f64,
    n_samples: usize,
    seed: u64,
}

fn moment(cli: &Cli, lattice: &str, r: f64) -> Result<Execution> {
    let lat: Lattice = lattice.parse()?;
    let est = lat.normalized_moment_mc(r, cli.samples, cli.seed)?;
    let row = MomentRow {
        lattice: lattice.to_string(),
        d: lat.rank(),
        r,
        ell: est.ell,
        per_dim_g: est.per_dim_g,
        std_error: est.std_error,
        n_samples: est.n_samples,
        seed: est.seed,
    };
    let payload = match cli.format {
        OutputFormat::Json => to_json(&[&row])?,
        OutputFormat::Csv => {
            format!(
                "lattice,d,r,ell,per_dim_G,std_error,n_samples,seed\n{},{},{},{},{},{},{},{}\n",
                row.lattice,
                row.d,
                row.r,
                row.ell,
                row.per_dim_g,
                row.std_error,
                row.n_samples,
                row.seed
            )
        }
    };
    Ok(Execution { payload, warnings: vec![], partial: false })
}

fn evaluate(cli: &Cli, quantizer: &str, source: &str, r: f64, mode: &str) -> Result<Execution> {
    let spec: QuantizerSpec = quantizer.parse()?;
    let source: SourceModel = source.parse()?;
    let report = match (mode, spec.is_lattice()) {
        ("exact", false) => spec.build_scalar(&source)?.report_exact(&source, r)?,
        ("mc", false) => {
            spec.build_scalar(&source)?.report_mc(&source, r, cli.samples, cli.seed)?
        }
        ("mc", true) | ("exact", true) => {
            // Lattice evaluation is MC-only.
            if mode == "exact" {
                return Err(Error::Unsupported(
                    "lattice quantizers are evaluated with --mode mc".into(),
                ));
            }
            spec.build_lattice()?.report_mc(&source, r, cli.samples, cli.seed)?
        }
        _ => return Err(Error::Parse(format!("unknown mode '{mode}'"))),
    };
    let payload = match cli.format {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => {
            format!(
                "distortion,distortion_err,entropy_nats,entropy_err,r,method,n,seed\n{},{},{},{},{},{},{},{}\n",
                report.distortion,
                report.distortion_err,
                report.entropy_nats,
                report.entropy_err,
                report.r,
                report.method,
                opt(report.n),
                opt(report.seed)
            )
        }
    };
    Ok(Execution { payload, warnings: vec![], partial: false })
}

fn rerun(manifest: &Path) -> Result<Execution> {
    let body = std::fs::read_to_string(manifest)?;
    let m: RunManifest =
        serde_json::from_str(&body).map_err(|e| Error::Parse(format!("manifest: {e}")))?;
    // Re-execute the recorded argv but capture the payload instead of
    // writing to the recorded output path.
    let mut argv = m.argv.clone();
    strip_out_flag(&mut argv);
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| Error::Parse(format!("recorded argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Rerun { .. }) {
        return Err(Error::InvalidParameter("manifest records a rerun; refusing".into()));
    }
    let exec = execute(&cli)?;
    let sha = sha256_hex(exec.payload.as_bytes());
    if sha != m.payload_sha256 {
        return Err(Error::Nonconvergent(format!(
            "payload checksum changed: manifest {} vs rerun {sha}",
            m.payload_sha256
        )));
    }
    let mut warnings = exec.warnings;
    warnings.push(format!("reproduced {} bytes, sha256 {sha}", exec.payload.len()));
    Ok(Execution { payload: exec.payload, warnings, partial: exec.partial })
}

fn strip_out_flag(argv: &mut Vec<String>) {
    if let Some(i) = argv.iter().position(|a| a == "--out") {
        argv.drain(i..(i + 2).min(argv.len()));
    } else if let Some(i) = argv.iter().position(|a| a.starts_with("--out=")) {
        argv.remove(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_dims("2,8").unwrap(), vec![2, 8]);
        assert!(parse_dims("0..3").is_err());
        assert!(parse_dims("x").is_err());
    }

    #[test]
    fn decode_example() {
        let c = cli(&["exrate", "lattice", "decode", "Z:2", "0.4,-1.6"]);
        let exec = execute(&c).unwrap();
        assert_eq!(exec.payload, "0,-2\n");
    }

    #[test]
    fn figure1_small_is_deterministic() {
        let args =
            ["exrate", "--samples", "20000", "--seed", "5", "figure1", "--dims", "1..3", "--lattices", "Z,A"];
        let a = execute(&cli(&args)).unwrap();
        let b = execute(&cli(&args)).unwrap();
        assert_eq!(a.payload, b.payload);
        let first = a.payload.lines().next().unwrap();
        assert_eq!(
            first,
            "d,lb_bits_per_dim,zador_ub_bits_per_dim,lattice,lattice_ub_bits_per_dim,moment_source,moment_std_err"
        );
        assert_eq!(a.payload.lines().count(), 1 + 6);
    }

    #[test]
    fn figure1_blank_columns_for_missing_decoder() {
        let c = cli(&["exrate", "figure1", "--dims", "3..3", "--lattices", "E8"]);
        let exec = execute(&c).unwrap();
        assert_eq!(exec.warnings.len(), 1);
        let row = exec.payload.lines().nth(1).unwrap();
        assert!(row.ends_with(",,"), "row: {row}");
    }

    #[test]
    fn moment_csv_schema() {
        let c = cli(&["exrate", "--samples", "10000", "lattice", "moment", "Z:1"]);
        let exec = execute(&c).unwrap();
        assert!(exec
            .payload
            .starts_with("lattice,d,r,ell,per_dim_G,std_error,n_samples,seed\n"));
    }

    #[test]
    fn strip_out_variants() {
        let mut a = vec!["exrate".into(), "--out".into(), "x.csv".into(), "figure1".into()];
        strip_out_flag(&mut a);
        assert_eq!(a, vec!["exrate", "figure1"]);
        let mut b = vec!["exrate".into(), "--out=x.csv".into(), "figure1".into()];
        strip_out_flag(&mut b);
        assert_eq!(b, vec!["exrate", "figure1"]);
    }
}
