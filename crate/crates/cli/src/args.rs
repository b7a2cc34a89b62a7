use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfa_dvv_core::field::Filter;
use mfa_dvv_core::mfa::{CtrlSpec, KnotPlacement};

#[derive(Debug, Parser)]
#[command(
    name = "mfa-dvv",
    version,
    about = "Block-wise spline volume encoding and distributed rendering"
)]
pub struct Cli {
    /// Seed for stochastic steps; every current stage is deterministic, so it
    /// is recorded but does not change output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Suppress informational output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the Marschner-Lobb signal to a raw volume plus sidecar.
    GenMl(GenMlArgs),
    /// Partition a raw volume and encode every block.
    Encode(EncodeArgs),
    /// Render an encoded dataset (or a raw volume) to PNG.
    Render(RenderArgs),
    /// Sweep worker counts and write a timing CSV.
    Bench(BenchArgs),
    /// Compare two images: MSE, PSNR and SSIM.
    Compare(CompareArgs),
    /// Run the HTTP render service.
    Serve(ServeArgs),
}

/// Three comma-separated values or one value for all axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple<T>(pub [T; 3]);

impl<T: FromStr + Copy> FromStr for Triple<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<T> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<T>()
                    .map_err(|_| format!("cannot parse '{p}'"))
            })
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [v] => Ok(Triple([v; 3])),
            [a, b, c] => Ok(Triple([a, b, c])),
            _ => Err(format!("expected 1 or 3 comma-separated values, got '{s}'")),
        }
    }
}

/// `match`, `N` or `a,b,c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CtrlArg(pub CtrlSpec);

impl FromStr for CtrlArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("match") {
            return Ok(CtrlArg(CtrlSpec::Match));
        }
        let Triple(c) = s.parse::<Triple<usize>>()?;
        Ok(CtrlArg(CtrlSpec::Fixed(c)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KnotsArg {
    Fitted,
    Uniform,
}

impl From<KnotsArg> for KnotPlacement {
    fn from(k: KnotsArg) -> Self {
        match k {
            KnotsArg::Fitted => KnotPlacement::Fitted,
            KnotsArg::Uniform => KnotPlacement::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterArg {
    Nearest,
    Trilinear,
    Tricubic,
    CatmullRom,
}

impl From<FilterArg> for Filter {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::Nearest => Filter::Nearest,
            FilterArg::Trilinear => Filter::Trilinear,
            FilterArg::Tricubic => Filter::Tricubic,
            FilterArg::CatmullRom => Filter::CatmullRom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DtypeArg {
    F32,
    F64,
    U8,
}

#[derive(Debug, Args)]
pub struct GenMlArgs {
    /// Samples per axis: N or nx,ny,nz.
    #[arg(long, default_value = "64")]
    pub dims: Triple<usize>,
    /// Physical extent on every axis as lo,hi.
    #[arg(long, default_value = "0,7", value_parser = parse_pair)]
    pub domain: (f64, f64),
    #[arg(long, default_value_t = 6.0)]
    pub f_m: f64,
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = DtypeArg::F32)]
    pub dtype: DtypeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Raw volume with a `.meta` sidecar.
    #[arg(long)]
    pub input: PathBuf,
    /// Bisection levels; the volume splits into 2^levels blocks.
    #[arg(long, default_value_t = 0)]
    pub levels: u32,
    /// Control points per block: `match`, N or a,b,c.
    #[arg(long, default_value = "match", conflicts_with = "e_max")]
    pub ctrl: CtrlArg,
    /// Adaptive encoding to this relative error instead of a fixed count.
    #[arg(long)]
    pub e_max: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    #[arg(long, value_enum, default_value_t = KnotsArg::Fitted)]
    pub knots: KnotsArg,
    /// Blocks encoded concurrently; defaults to the available cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Dataset name; defaults to the input file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Output directory for block models and the manifest.
    #[arg(long)]
    pub out: PathBuf,
}

/// Where blocks come from: an encoded dataset or a raw volume.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Encoded dataset directory.
    #[arg(long, required_unless_present = "raw", conflicts_with = "raw")]
    pub models: Option<PathBuf>,
    /// Raw volume rendered with a baseline filter.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    /// Reconstruction filter for a raw volume [default: trilinear].
    #[arg(long, value_enum)]
    pub filter: Option<FilterArg>,
    /// Bisection levels for a raw volume [default: 0].
    #[arg(long)]
    pub levels: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ViewArgs {
    /// Camera document; overrides the default orbit view.
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// Transfer-function document; overrides --preset.
    #[arg(long)]
    pub tf: Option<PathBuf>,
    #[arg(long, default_value = "warm")]
    pub preset: String,
    /// Render-settings document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Ray step; defaults to the settings document, else half the finest
    /// grid spacing.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long, default_value_t = 30.0)]
    pub azimuth: f64,
    #[arg(long, default_value_t = 20.0)]
    pub elevation: f64,
    /// Enable Blinn-Phong shading.
    #[arg(long)]
    pub shading: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub view: ViewArgs,
    /// Workers; defaults to one per block.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output PNG.
    #[arg(long)]
    pub out: PathBuf,
    /// Append a timing row to this CSV (header written when new).
    #[arg(long)]
    pub timings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub view: ViewArgs,
    /// Largest worker count; the sweep is 1, 2, 4, ... up to it.
    #[arg(long)]
    pub max_workers: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub test: PathBuf,
    pub reference: PathBuf,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Also write the report as JSON to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Dataset directories, or directories containing them.
    #[arg(long = "data", required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long, default_value_t = mfa_dvv_service::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Workers per render; defaults to one per block.
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected lo,hi, got '{s}'"))?;
    let lo: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse '{a}'"))?;
    let hi: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse '{b}'"))?;
    if !(hi > lo) {
        return Err(format!("need lo < hi, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn ctrl_forms() {
        assert_eq!("match".parse::<CtrlArg>().unwrap().0, CtrlSpec::Match);
        assert_eq!("32".parse::<CtrlArg>().unwrap().0, CtrlSpec::Fixed([32; 3]));
        assert_eq!(
            "8,16,32".parse::<CtrlArg>().unwrap().0,
            CtrlSpec::Fixed([8, 16, 32])
        );
        assert!("8,16".parse::<CtrlArg>().is_err());
        assert!("x".parse::<CtrlArg>().is_err());
    }

    #[test]
    fn domain_pair() {
        assert_eq!(parse_pair("-1,1").unwrap(), (-1.0, 1.0));
        assert!(parse_pair("1,1").is_err());
        assert!(parse_pair("1").is_err());
    }
}
