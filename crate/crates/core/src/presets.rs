//! Built-in worked examples and the end-to-end analysis pipeline.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    density_verdict, scan_region, DensityReport, GridSpec, ProbeMapping, RegionScan, ScanOptions,
};
use crate::basis::BasisFamily;
use crate::curve::RationalMap;
use crate::error::{Error, Result};
use crate::measure::{project_measure, pushforward, uniform_circle_measure, DiscreteMeasure};

pub const DEFAULT_NODES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Preset {
    /// `z1 z2 = 1` parametrized by `(ζ, 1/ζ)`, uniform measure on `|ζ| = 1`.
    Hyperbola,
    /// `(ζ², ζ³)` with the uniform circle measure pushed forward.
    Cusp,
    /// The hyperbola measure projected by `z1 + a z2`.
    Projection {
        #[serde(with = "crate::wire::complex")]
        a: Complex64,
    },
    /// Uniform measure on the unit circle with polynomials in `ζ`.
    Circle,
}

/// Everything needed to analyse one measure.
#[derive(Clone, Debug)]
pub struct Problem {
    /// Absent for problems assembled from files.
    pub preset: Option<Preset>,
    /// Parametrization of the support, when the analysis happens on a curve.
    pub map: Option<RationalMap>,
    /// Parameter-side measure.
    pub nu: DiscreteMeasure,
    /// Measure analysed for bounded point evaluations.
    pub mu: DiscreteMeasure,
    pub family: BasisFamily,
    pub probe: ProbeMapping,
    /// Degree of the parametrization as seen by the basis, for the density guard.
    pub param_degree: usize,
    pub default_grid: GridSpec,
}

impl Preset {
    pub fn from_name(name: &str, a: Option<Complex64>) -> Result<Self> {
        match name {
            "hyperbola" => Ok(Preset::Hyperbola),
            "cusp" => Ok(Preset::Cusp),
            "circle" => Ok(Preset::Circle),
            "projection" => Ok(Preset::Projection {
                a: a.unwrap_or(Complex64::new(0.0, 0.0)),
            }),
            other => Err(Error::Invalid(format!(
                "unknown preset {other}; expected hyperbola, cusp, projection or circle"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Hyperbola => "hyperbola",
            Preset::Cusp => "cusp",
            Preset::Projection { .. } => "projection",
            Preset::Circle => "circle",
        }
    }

    pub fn build(&self, n: usize) -> Result<Problem> {
        let nu = uniform_circle_measure(1.0, n, TAU)?;
        let data = match *self {
            Preset::Hyperbola => {
                let map = RationalMap::hyperbola();
                Problem {
                    preset: Some(*self),
                    mu: pushforward(&nu, &map)?.with_label("hyperbola z1 z2 = 1"),
                    nu,
                    family: BasisFamily::CurveMonomials { dim: 2 },
                    probe: ProbeMapping::ThroughMap(map.clone()),
                    map: Some(map),
                    param_degree: 1,
                    default_grid: GridSpec::square(-2.0, 2.0, 40),
                }
            }
            Preset::Cusp => {
                let map = RationalMap::monomial(&[2, 3]);
                Problem {
                    preset: Some(*self),
                    mu: pushforward(&nu, &map)?.with_label("cusp (ζ², ζ³)"),
                    nu,
                    family: BasisFamily::CurveMonomials { dim: 2 },
                    probe: ProbeMapping::ThroughMap(map.clone()),
                    map: Some(map),
                    param_degree: 3,
                    default_grid: GridSpec::square(-1.5, 1.5, 30),
                }
            }
            Preset::Projection { a } => {
                let hyper = pushforward(&nu, &RationalMap::hyperbola())?;
                let extent = 1.0 + a.norm() + 1.0;
                Problem {
                    preset: Some(*self),
                    mu: project_measure(&hyper, a)?,
                    nu,
                    family: BasisFamily::ParameterPolynomials,
                    probe: ProbeMapping::Direct,
                    map: None,
                    param_degree: 1,
                    default_grid: GridSpec::square(-extent, extent, 40),
                }
            }
            Preset::Circle => Problem {
                preset: Some(*self),
                mu: nu.clone(),
                nu,
                family: BasisFamily::ParameterPolynomials,
                probe: ProbeMapping::Direct,
                map: Some(RationalMap::identity()),
                param_degree: 1,
                default_grid: GridSpec::square(-1.5, 1.5, 30),
            },
        };
        Ok(data)
    }
}

/// Largest degree the density guard admits for this problem.
pub fn guarded_density_degree(data: &Problem) -> usize {
    let n = data.mu.exactness_order().unwrap_or(0);
    n / (2 * data.param_degree.max(1))
}

/// Largest degree the scan coupling admits.
pub fn coupled_scan_degree(data: &Problem) -> usize {
    data.mu.exactness_order().unwrap_or(0).saturating_sub(1) / 4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub preset: Option<Preset>,
    pub scan: RegionScan,
    pub density: DensityReport,
    /// Whether a bounded component exists exactly when the span stays strict.
    pub consistent: bool,
}

/// Region scan plus density verdict.
pub fn analyze(
    data: &Problem,
    grid: &GridSpec,
    scan_options: &ScanOptions,
    density_d_max: usize,
) -> Result<AnalysisReport> {
    let mut opts = scan_options.clone();
    if let Some(map) = &data.map {
        if opts.skip_points.is_empty() && map.dim() > 1 {
            let report = map.properness_diagnostic(200, 0)?;
            opts.skip_points = report.multi_fiber_points.into_iter().map(|p| p.image).collect();
        }
    }
    let scan = scan_region(&data.mu, &data.family, grid, &data.probe, &opts)?;
    let density = density_verdict(&data.mu, &data.family, density_d_max, data.param_degree)?;
    let consistent = scan.bounded_components.is_empty() == density.saturates();
    Ok(AnalysisReport {
        preset: data.preset,
        scan,
        density,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_round_trip() {
        for name in ["hyperbola", "cusp", "projection", "circle"] {
            assert_eq!(Preset::from_name(name, None).unwrap().name(), name);
        }
        assert!(Preset::from_name("torus", None).is_err());
    }

    #[test]
    fn projection_at_zero_is_the_circle() {
        let p = Preset::Projection { a: Complex64::new(0.0, 0.0) }.build(16).unwrap();
        for (x, z) in p.mu.nodes().zip(p.nu.nodes()) {
            assert!((x[0] - z[0]).norm() < 1e-15);
        }
    }

    #[test]
    fn guards() {
        let h = Preset::Hyperbola.build(256).unwrap();
        assert_eq!(guarded_density_degree(&h), 128);
        assert_eq!(coupled_scan_degree(&h), 63);
        let c = Preset::Cusp.build(256).unwrap();
        assert_eq!(guarded_density_degree(&c), 42);
    }
}
