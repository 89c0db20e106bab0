//! Command-line front end for `zipper-core`.
//!
//! Every command reads one zipper (a JSON file or a built-in preset), runs the
//! matching analysis and writes its artifacts into `--out`. Exit codes: 0 on
//! success, 1 when the input fails validation or a computation cannot be
//! carried out, 2 for usage and configuration errors.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub mod commands;
pub mod output;
pub mod schema;

use schema::{Source, ZipperFile};
use zipper_core::{NormKind, Zipper};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed files.
    #[error("{0}")]
    Config(String),
    /// Validation failures and errors raised by the analysis.
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl From<zipper_core::Error> for CliError {
    fn from(e: zipper_core::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

/// `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:step, got {s:?}"));
        }
        let f = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
        let g = Grid {
            lo: f(parts[0])?,
            hi: f(parts[1])?,
            step: f(parts[2])?,
        };
        if !(g.step > 0.0 && g.hi >= g.lo && g.lo.is_finite() && g.hi.is_finite()) {
            return Err(format!("need lo <= hi and step > 0, got {s:?}"));
        }
        Ok(g)
    }
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        zipper_core::pressure::grid(self.lo, self.hi, self.step).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

/// Comma-separated, strictly increasing depths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Depths(pub Vec<usize>);

impl FromStr for Depths {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = s
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("depths must be positive and increasing, got {s:?}"));
        }
        Ok(Depths(v))
    }
}

/// Comma-separated reals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reals(pub Vec<f64>);

impl FromStr for Reals {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Reals)
    }
}

/// `auto` or a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Betas {
    Auto,
    Grid(Grid),
}

impl FromStr for Betas {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(Betas::Auto)
        } else {
            s.parse().map(Betas::Grid)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Norm {
    Spectral,
    Entrywise1,
}

impl From<Norm> for NormKind {
    fn from(n: Norm) -> NormKind {
        match n {
            Norm::Spectral => NormKind::Spectral,
            Norm::Entrywise1 => NormKind::Entrywise1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "zipper", version, about = "Affine zipper curves: pressure, Hölder spectrum, cone certificates")]
#[command(after_help = "Environment: ZIPPER_THREADS caps the worker threads (0 or unset = all cores).")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the zipper invariants; the report goes to stdout or --report.
    Validate(ValidateArgs),
    /// Tabulate P_n(t), the extrapolated P(t) and P'(t) into pressure.csv.
    Pressure(PressureArgs),
    /// Legendre spectrum into spectrum.csv and the counting spectrum into counting.csv.
    Spectrum(SpectrumArgs),
    /// Symbolic and direct Hölder exponent estimates into holder.csv.
    Holder(HolderArgs),
    /// Cone certificates into cones.json.
    Cones(ConesArgs),
    /// Sample the curve into curve.svg and curve.csv.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SourceArgs {
    /// Zipper JSON file, or a preset document {"preset": "derham", "omega": w}.
    #[arg(long, conflicts_with = "preset")]
    #[serde(skip)]
    pub zipper: Option<PathBuf>,
    /// Built-in zipper (available: derham).
    #[arg(long)]
    pub preset: Option<String>,
    /// De Rham parameter in (0, 1/2).
    #[arg(long)]
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Tolerance for the cross-condition and the weight sum.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Word length q of the contraction check.
    #[arg(long, default_value_t = 8)]
    pub contraction_depth: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PressureOpts {
    /// t-grid lo:hi:step.
    #[arg(long = "t", default_value = "-4:4:0.05", allow_hyphen_values = true)]
    pub t: Grid,
    /// Depths n of the approximants P_n, comma-separated and increasing.
    #[arg(long, default_value = "4,8,12,16,20")]
    pub depths: Depths,
    /// Matrix norm.
    #[arg(long, value_enum, default_value_t = Norm::Spectral)]
    pub norm: Norm,
    /// Maximum number of products per enumeration.
    #[arg(long, default_value_t = zipper_core::DEFAULT_LEAF_BUDGET)]
    pub budget: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PressureArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub pressure: PressureOpts,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub pressure: PressureOpts,
    /// `auto` (evenly spaced on [alpha_min, alpha_max] plus P'(0)) or lo:hi:step.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    pub betas: Betas,
    /// Number of evenly spaced values for --betas auto.
    #[arg(long, default_value_t = 41)]
    pub beta_count: usize,
    /// Tolerance of the Legendre minimization.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Scale r of the stopping-time partition for the counting spectrum.
    #[arg(long, default_value_t = 1.0 / 65536.0)]
    pub counting_r: f64,
    /// Half-width of the counting bins.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HolderArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Points x in (0, 1), comma-separated; overrides --random.
    #[arg(long)]
    pub points: Option<Reals>,
    /// Number of uniformly drawn points.
    #[arg(long, default_value_t = 20)]
    pub random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Word length of the symbolic estimator.
    #[arg(long, default_value_t = 40)]
    pub depth: usize,
    /// Number of dyadic scales of the direct estimator.
    #[arg(long, default_value_t = 16)]
    pub scales: usize,
    /// Random points per scale of the direct estimator.
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConesArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Required clearance of the cone images and the sampling margin.
    #[arg(long, default_value_t = 1e-3)]
    pub margin: f64,
    /// Random directions for the inner-product test when d > 2.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Depth range of the splitting diagnostic, lo:hi.
    #[arg(long, default_value = "2:14")]
    pub splitting: DepthRange,
    /// Words sampled per depth once a level has more than this many.
    #[arg(long, default_value_t = 4096)]
    pub splitting_samples: usize,
    /// Vertex level of the well-ordered test.
    #[arg(long, default_value_t = 10)]
    pub level: usize,
    /// Angular half-width around the stable directions.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Word length of the stable directions.
    #[arg(long, default_value_t = 8)]
    pub direction_depth: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

/// `lo:hi` depths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthRange {
    pub lo: usize,
    pub hi: usize,
}

impl FromStr for DepthRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let lo = a.trim().parse::<usize>().map_err(|e| format!("{a:?}: {e}"))?;
        let hi = b.trim().parse::<usize>().map_err(|e| format!("{b:?}: {e}"))?;
        if lo == 0 || hi < lo + 1 {
            return Err(format!("need 1 <= lo < hi, got {s:?}"));
        }
        Ok(DepthRange { lo, hi })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RenderArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Level of the sampled vertices; the polyline has N^depth + 1 points.
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

/// The zipper a command works on, with what is needed to describe it.
pub struct Loaded {
    pub zipper: Zipper,
    pub file: ZipperFile,
    /// `ω` when the zipper came from the de Rham preset.
    pub omega: Option<f64>,
}

pub fn load(source: &SourceArgs) -> Result<Loaded, CliError> {
    let (preset, omega) = match (&source.zipper, &source.preset) {
        (Some(path), None) => {
            if source.omega.is_some() {
                return Err(CliError::Config("--omega only applies to --preset".into()));
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            match schema::parse(&text)? {
                Source::File(f) => {
                    let zipper = f.clone().into_zipper()?;
                    return Ok(Loaded {
                        zipper,
                        file: f,
                        omega: None,
                    });
                }
                Source::Preset(p) => (p.preset, p.omega),
            }
        }
        (None, Some(p)) => (p.clone(), source.omega),
        (None, None) => return Err(CliError::Config("give either --zipper FILE or --preset NAME".into())),
        (Some(_), Some(_)) => return Err(CliError::Config("--zipper and --preset are exclusive".into())),
    };
    let zipper = schema::preset(&preset, omega)?;
    Ok(Loaded {
        file: ZipperFile::from_zipper(&zipper),
        zipper,
        omega: if preset == "derham" { omega } else { None },
    })
}

/// SHA-256 over the command name, the resolved zipper and the options.
pub fn config_hash<T: Serialize>(command: &str, file: &ZipperFile, options: &T) -> String {
    let doc = serde_json::json!({
        "command": command,
        "zipper": file,
        "options": options,
    });
    let bytes = serde_json::to_vec(&doc).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

/// Honors `ZIPPER_THREADS` (0 or unset means one thread per core).
pub fn init_threads() -> Result<(), CliError> {
    let n = match std::env::var("ZIPPER_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("ZIPPER_THREADS must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    if n > 0 {
        // a pool may already exist when called more than once in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match init_threads().and_then(|_| dispatch(&cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Validate(a) => commands::validate(a),
        Command::Pressure(a) => {
            ensure_dir(&a.out.out)?;
            commands::pressure(a)
        }
        Command::Spectrum(a) => {
            ensure_dir(&a.out.out)?;
            commands::spectrum(a)
        }
        Command::Holder(a) => {
            ensure_dir(&a.out.out)?;
            commands::holder(a)
        }
        Command::Cones(a) => {
            ensure_dir(&a.out.out)?;
            commands::cones(a)
        }
        Command::Render(a) => {
            ensure_dir(&a.out.out)?;
            commands::render(a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_depth_syntax() {
        let g: Grid = "-4:4:0.05".parse().unwrap();
        assert_eq!(g.points().unwrap().len(), 161);
        assert!("1:0:0.1".parse::<Grid>().is_err());
        assert!("0:1".parse::<Grid>().is_err());
        assert_eq!("4,8,12".parse::<Depths>().unwrap(), Depths(vec![4, 8, 12]));
        assert!("8,4".parse::<Depths>().is_err());
        assert!("0,4".parse::<Depths>().is_err());
        assert_eq!("auto".parse::<Betas>().unwrap(), Betas::Auto);
        assert_eq!("2:14".parse::<DepthRange>().unwrap(), DepthRange { lo: 2, hi: 14 });
    }

    #[test]
    fn hash_depends_on_options_only() {
        let z = zipper_core::derham::build(0.1).unwrap();
        let f = ZipperFile::from_zipper(&z);
        let a = config_hash("render", &f, &serde_json::json!({"depth": 12}));
        let b = config_hash("render", &f, &serde_json::json!({"depth": 12}));
        let c = config_hash("render", &f, &serde_json::json!({"depth": 11}));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}
