//! Command-line arguments, their validation and the serialized job record.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use curvebpe::analysis::{map_degree, GridSpec, GrowthPolicy, ProbeMapping};
use curvebpe::basis::BasisFamily;
use curvebpe::curve::RationalMap;
use curvebpe::measure::DiscreteMeasure;
use curvebpe::presets::{Preset, Problem, DEFAULT_NODES};
use num_complex::Complex64;
use serde::Serialize;

use crate::CliError;

#[derive(Parser, Debug, Serialize)]
#[command(name = "curve-bpe", version, about = "Bounded point evaluations for measures on rational curves")]
pub struct Cli {
    /// Directory receiving the JSON and CSV artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for every random choice made by the job.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Region scan plus density verdict.
    Analyze(AnalyzeArgs),
    /// Transport a curve measure to the parameter plane.
    Pullback(PullbackArgs),
    /// Push a parameter-side measure onto the curve.
    Pushforward(PushforwardArgs),
    /// Codimension of the pullback algebra of a polynomial map.
    Codim(CodimArgs),
    /// Block decomposition of the coordinate multiplication operators.
    Blocks(BlocksArgs),
    /// Approximate joint eigenvector of the adjoint compressions.
    Witness(WitnessArgs),
    /// Parameter-plane region and pole representatives for rational approximation.
    Region(RegionArgs),
    /// Push a measure on ℂ² forward by z1 + a z2.
    Project(ProjectArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Pullback(_) => "pullback",
            Command::Pushforward(_) => "pushforward",
            Command::Codim(_) => "codim",
            Command::Blocks(_) => "blocks",
            Command::Witness(_) => "witness",
            Command::Region(_) => "region",
            Command::Project(_) => "project",
        }
    }
}

/// A built-in example or a measure file, optionally with its parametrization.
#[derive(Args, Debug, Serialize, Clone)]
pub struct Source {
    /// hyperbola, cusp, projection or circle.
    #[arg(long, conflicts_with = "measure")]
    pub preset: Option<String>,
    /// Projection coefficient, `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Quadrature nodes for presets.
    #[arg(long, default_value_t = DEFAULT_NODES)]
    pub nodes: usize,
    /// Measure JSON file.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Map JSON file parametrizing the support.
    #[arg(long)]
    pub map: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct PolicyArgs {
    #[arg(long)]
    pub plateau_tol: Option<f64>,
    #[arg(long)]
    pub slope_tol: Option<f64>,
    #[arg(long)]
    pub exp_tol: Option<f64>,
    #[arg(long)]
    pub fit_fraction: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 0)]
    pub dmin: usize,
    #[arg(long, default_value_t = 16)]
    pub dmax: usize,
    /// `lo,hi,n` for a square or `re_lo,re_hi,im_lo,im_hi,nx,ny`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Degree for the density verdict; defaults to the guarded maximum.
    #[arg(long)]
    pub density_dmax: Option<usize>,
    /// Smallest bounded component reported.
    #[arg(long, default_value_t = 4)]
    pub min_component: usize,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct PullbackArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub measure: PathBuf,
    /// Residual tolerance for fiber points.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Largest relative dropped mass accepted.
    #[arg(long, default_value_t = curvebpe::measure::DROPPED_MASS_LIMIT)]
    pub max_dropped: f64,
    /// Random polynomials used for the isometry report.
    #[arg(long, default_value_t = 50)]
    pub checks: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct PushforwardArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub measure: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct CodimArgs {
    #[arg(long, conflicts_with = "map")]
    pub preset: Option<String>,
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub cap: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct BlocksArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub degree: usize,
    /// Coordinate index; every coordinate when absent.
    #[arg(long)]
    pub coordinate: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct WitnessArgs {
    #[command(flatten)]
    pub source: Source,
    /// Point as `re,im` per coordinate, separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: String,
    /// Read `--beta` as a parameter value and map it onto the curve.
    #[arg(long)]
    pub through_map: bool,
    /// `lo..hi` or a comma-separated list.
    #[arg(long, default_value = "10..30")]
    pub degrees: String,
}

#[derive(Args, Debug, Serialize)]
pub struct RegionArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    /// Representatives as `re,im` separated by `;`, replacing the map poles.
    #[arg(long, allow_hyphen_values = true)]
    pub poles: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub source: Source,
}

/// Everything needed to reproduce a job; embedded in every report.
#[derive(Debug, Serialize)]
pub struct JobConfig<'a> {
    pub command: &'static str,
    pub seed: u64,
    pub arguments: &'a Command,
}

#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub config: &'a JobConfig<'a>,
    pub result: T,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    CliError::Validation(msg.into()).into()
}

pub fn parse_complex(s: &str) -> anyhow::Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| invalid(format!("bad number {t:?} in {s:?}")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(invalid(format!("expected re or re,im, got {s:?}"))),
    }
}

pub fn parse_points(s: &str) -> anyhow::Result<Vec<Complex64>> {
    s.split(';').filter(|t| !t.trim().is_empty()).map(parse_complex).collect()
}

pub fn parse_degrees(s: &str) -> anyhow::Result<Vec<usize>> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| invalid(format!("bad degree {t:?}")));
    let out: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi)?);
        if lo > hi {
            return Err(invalid(format!("empty degree range {s:?}")));
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(num).collect::<anyhow::Result<_>>()?
    };
    if out.is_empty() {
        return Err(invalid("no degrees given"));
    }
    Ok(out)
}

pub fn parse_grid(s: &str) -> anyhow::Result<GridSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let f = |t: &str| t.parse::<f64>().map_err(|_| invalid(format!("bad grid value {t:?}")));
    let n = |t: &str| t.parse::<usize>().map_err(|_| invalid(format!("bad grid count {t:?}")));
    let grid = match parts.as_slice() {
        [lo, hi, k] => GridSpec::square(f(lo)?, f(hi)?, n(k)?),
        [rl, rh, il, ih, nx, ny] => GridSpec::Rectangular {
            re: [f(rl)?, f(rh)?],
            im: [f(il)?, f(ih)?],
            nx: n(nx)?,
            ny: n(ny)?,
        },
        _ => return Err(invalid(format!("grid must be lo,hi,n or re_lo,re_hi,im_lo,im_hi,nx,ny; got {s:?}"))),
    };
    grid.validate()?;
    Ok(grid)
}

impl PolicyArgs {
    pub fn policy(&self) -> anyhow::Result<GrowthPolicy> {
        let mut p = GrowthPolicy::default();
        if let Some(x) = self.plateau_tol {
            p.plateau_tol = x;
        }
        if let Some(x) = self.slope_tol {
            p.slope_tol = x;
        }
        if let Some(x) = self.exp_tol {
            p.exp_tol = x;
        }
        if let Some(x) = self.fit_fraction {
            p.fit_fraction = x;
        }
        p.validate()?;
        Ok(p)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("cannot parse {}: {e}", path.display())))
}

pub fn resolve_preset(name: &str, a: Option<&str>) -> anyhow::Result<Preset> {
    let a = a.map(parse_complex).transpose()?;
    Ok(Preset::from_name(name, a)?)
}

impl Source {
    /// The measure to analyse, its family and how probes are placed.
    pub fn problem(&self) -> anyhow::Result<Problem> {
        if let Some(name) = &self.preset {
            if self.map.is_some() {
                return Err(invalid("--map cannot be combined with --preset"));
            }
            if self.a.is_some() && name != "projection" {
                return Err(invalid("--a only applies to the projection preset"));
            }
            return Ok(resolve_preset(name, self.a.as_deref())?.build(self.nodes)?);
        }
        let Some(path) = &self.measure else {
            return Err(invalid("either --preset or --measure is required"));
        };
        let mu: DiscreteMeasure = read_json(path)?;
        let map: Option<RationalMap> = self.map.as_deref().map(read_json).transpose()?;
        let family = if mu.dim() == 1 {
            BasisFamily::ParameterPolynomials
        } else {
            BasisFamily::CurveMonomials { dim: mu.dim() }
        };
        let (probe, param_degree) = match &map {
            Some(m) if m.dim() == mu.dim() && m.dim() > 1 => (ProbeMapping::ThroughMap(m.clone()), map_degree(m)),
            Some(m) if m.dim() != mu.dim() => {
                return Err(invalid(format!(
                    "map has dimension {} but the measure has dimension {}",
                    m.dim(),
                    mu.dim()
                )))
            }
            _ => (ProbeMapping::Direct, 1),
        };
        let extent = mu.bounding_radius() * 1.25 + 0.5;
        Ok(Problem {
            preset: None,
            map,
            nu: mu.clone(),
            mu,
            family,
            probe,
            param_degree: param_degree.max(1),
            default_grid: GridSpec::square(-extent, extent, 40),
        })
    }
}
