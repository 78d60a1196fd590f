//! Growth classification of `C_d` sequences and the analyses built on it:
//! region scans, base change between curve and parameter plane, and the
//! density verdict.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisFamily;
use crate::curve::RationalMap;
use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, Semantics};
use crate::ortho::OrthonormalSystem;
use crate::poly::Poly;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthPolicy {
    /// Bounded when `C` grows by at most this fraction over the top third
    /// of the degree range.
    pub plateau_tol: f64,
    /// Divergent when the slope of `log C` against `log d` reaches this.
    pub slope_tol: f64,
    /// Divergent when the slope of `log C` against `d` reaches this.
    pub exp_tol: f64,
    /// Fraction of the degree range, counted from the top, used by the fits.
    pub fit_fraction: f64,
}

impl Default for GrowthPolicy {
    fn default() -> Self {
        GrowthPolicy {
            plateau_tol: 0.02,
            slope_tol: 0.45,
            exp_tol: 0.05,
            fit_fraction: 0.5,
        }
    }
}

impl GrowthPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.plateau_tol, self.slope_tol, self.exp_tol]
            .iter()
            .all(|t| t.is_finite() && *t > 0.0)
            && self.fit_fraction > 0.0
            && self.fit_fraction <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid("growth policy thresholds must be positive".into()))
        }
    }
}

/// Fewest sequence entries that can be classified.
pub const MIN_SEQUENCE_POINTS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Bounded,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthKind {
    Plateau,
    Exponential,
    Algebraic,
    /// Some constant is infinite.
    Unbounded,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub classification: Classification,
    pub growth_kind: GrowthKind,
    #[serde(with = "crate::wire::extended_real_opt")]
    pub limit_estimate: Option<f64>,
    /// Rate matching `growth_kind`: the exponential or algebraic slope.
    #[serde(with = "crate::wire::extended_real_opt")]
    pub growth_rate: Option<f64>,
    /// Least-squares slope of `log C_d` against `d`.
    pub exponential_rate: Option<f64>,
    /// Least-squares slope of `log C_d` against `log d`.
    pub algebraic_rate: Option<f64>,
    /// `(C_last − C_start)/C_last` over the top third.
    pub plateau_increment: Option<f64>,
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

pub fn classify_growth(constants: &[f64], degrees: &[usize], policy: &GrowthPolicy) -> Result<GrowthFit> {
    policy.validate()?;
    if constants.len() != degrees.len() {
        return Err(Error::DimensionMismatch {
            expected: degrees.len(),
            got: constants.len(),
        });
    }
    if constants.len() < MIN_SEQUENCE_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_SEQUENCE_POINTS,
            got: constants.len(),
        });
    }
    if constants.iter().any(|c| c.is_nan() || *c < 0.0) {
        return Err(Error::Invalid("constants must be non-negative".into()));
    }
    for i in 1..constants.len() {
        if degrees[i] <= degrees[i - 1] {
            return Err(Error::Invalid("degrees must be strictly increasing".into()));
        }
        if constants[i] < constants[i - 1] * (1.0 - 1e-12) {
            return Err(Error::NotMonotone { index: i });
        }
    }
    if constants.iter().any(|c| c.is_infinite()) {
        return Ok(GrowthFit {
            classification: Classification::Divergent,
            growth_kind: GrowthKind::Unbounded,
            limit_estimate: None,
            growth_rate: Some(f64::INFINITY),
            exponential_rate: None,
            algebraic_rate: None,
            plateau_increment: None,
        });
    }

    let d_lo = degrees[0] as f64;
    let d_hi = *degrees.last().expect("non-empty") as f64;
    let last = *constants.last().expect("non-empty");
    let top = degrees
        .iter()
        .position(|&d| d as f64 >= d_hi - (d_hi - d_lo) / 3.0)
        .expect("last degree qualifies");
    let top = top.min(degrees.len() - 2);
    let plateau_increment = if last > 0.0 { (last - constants[top]) / last } else { 0.0 };

    let fit_start = degrees
        .iter()
        .position(|&d| d as f64 >= d_hi - policy.fit_fraction * (d_hi - d_lo))
        .expect("last degree qualifies")
        .min(degrees.len() - 3);
    let (mut xs, mut ls, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for i in fit_start..degrees.len() {
        if constants[i] > 0.0 {
            xs.push(degrees[i] as f64);
            ys.push(constants[i].ln());
            if degrees[i] > 0 {
                ls.push(i);
            }
        }
    }
    let exponential_rate = slope(&xs, &ys);
    let algebraic_rate = {
        let lx: Vec<f64> = ls.iter().map(|&i| (degrees[i] as f64).ln()).collect();
        let ly: Vec<f64> = ls.iter().map(|&i| constants[i].ln()).collect();
        slope(&lx, &ly)
    };

    let (classification, growth_kind, growth_rate) = if plateau_increment <= policy.plateau_tol {
        (Classification::Bounded, GrowthKind::Plateau, exponential_rate)
    } else if exponential_rate.is_some_and(|r| r >= policy.exp_tol) {
        (Classification::Divergent, GrowthKind::Exponential, exponential_rate)
    } else if algebraic_rate.is_some_and(|r| r >= policy.slope_tol) {
        (Classification::Divergent, GrowthKind::Algebraic, algebraic_rate)
    } else {
        (Classification::Inconclusive, GrowthKind::Undetermined, exponential_rate)
    };
    Ok(GrowthFit {
        classification,
        growth_kind,
        limit_estimate: (classification == Classification::Bounded).then_some(last),
        growth_rate,
        exponential_rate,
        algebraic_rate,
        plateau_increment: Some(plateau_increment),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpeReport {
    /// Evaluation point in the measure's space.
    #[serde(with = "crate::wire::complex_vec")]
    pub point: Vec<Complex64>,
    pub family: String,
    pub degrees: Vec<usize>,
    #[serde(with = "crate::wire::extended_reals")]
    pub constants: Vec<f64>,
    pub ranks: Vec<usize>,
    #[serde(flatten)]
    pub fit: GrowthFit,
    pub policy: GrowthPolicy,
}

impl BpeReport {
    pub fn classification(&self) -> Classification {
        self.fit.classification
    }

    pub fn last_constant(&self) -> f64 {
        *self.constants.last().expect("non-empty")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "d,c_d")?;
        for (d, c) in self.degrees.iter().zip(&self.constants) {
            writeln!(out, "{d},{}", fmt_real(*c))?;
        }
        Ok(())
    }
}

pub(crate) fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.17e}")
    } else {
        "inf".into()
    }
}

/// Analysis entry points require a quadrature of a continuous measure with
/// exactness order at least `4 d_max + 1`.
pub fn check_coupling(measure: &DiscreteMeasure, d_max: usize) -> Result<usize> {
    match measure.semantics() {
        Semantics::Atomic => Err(Error::AtomicMeasure),
        Semantics::QuadratureOfContinuous { exactness_order } => {
            let required = 4 * d_max + 1;
            if exactness_order < required {
                Err(Error::QuadratureTooCoarse {
                    exactness: exactness_order,
                    degree: d_max,
                    required,
                })
            } else {
                Ok(exactness_order)
            }
        }
    }
}

fn check_range(d_min: usize, d_max: usize) -> Result<()> {
    if d_min > d_max {
        return Err(Error::Invalid(format!("d_min {d_min} exceeds d_max {d_max}")));
    }
    Ok(())
}

/// Report from an already built system.
pub fn report_from_system(
    system: &OrthonormalSystem,
    point: &[Complex64],
    d_min: usize,
    policy: &GrowthPolicy,
) -> Result<BpeReport> {
    let d_max = system.d_max();
    check_range(d_min, d_max)?;
    let all = system.constants(point)?;
    let degrees: Vec<usize> = (d_min..=d_max).collect();
    let constants = all[d_min..=d_max].to_vec();
    let fit = classify_growth(&constants, &degrees, policy)?;
    Ok(BpeReport {
        point: point.to_vec(),
        family: system.family().name(),
        ranks: degrees.iter().map(|&d| system.rank(d)).collect(),
        degrees,
        constants,
        fit,
        policy: *policy,
    })
}

/// `C_d(point)` for `d_min ≤ d ≤ d_max` with its growth classification.
pub fn bpe_sequence(
    measure: &DiscreteMeasure,
    family: &BasisFamily,
    point: &[Complex64],
    d_min: usize,
    d_max: usize,
    policy: &GrowthPolicy,
) -> Result<BpeReport> {
    check_coupling(measure, d_max)?;
    check_range(d_min, d_max)?;
    let system = OrthonormalSystem::build(measure, family, d_max)?;
    report_from_system(&system, point, d_min, policy)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// Cell centres of an `nx × ny` partition of a rectangle.
    Rectangular { re: [f64; 2], im: [f64; 2], nx: usize, ny: usize },
    /// Radii (log spaced when requested, endpoints included) times equally
    /// spaced angles starting at 0.
    Polar {
        radius: [f64; 2],
        n_radii: usize,
        n_angles: usize,
        log_spaced: bool,
    },
}

impl GridSpec {
    /// Square grid `[lo, hi]²` with `n` cells per side.
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        GridSpec::Rectangular {
            re: [lo, hi],
            im: [lo, hi],
            nx: n,
            ny: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            GridSpec::Rectangular { re, im, nx, ny } => re[0] < re[1] && im[0] < im[1] && *nx > 0 && *ny > 0,
            GridSpec::Polar {
                radius,
                n_radii,
                n_angles,
                log_spaced,
            } => {
                radius[0] <= radius[1]
                    && *n_radii > 0
                    && *n_angles > 0
                    && (!log_spaced || radius[0] > 0.0)
                    && radius[0] >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid grid {self:?}")))
        }
    }

    /// `(rows, cols)`; cell `k` sits at row `k / cols`, column `k % cols`.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            GridSpec::Rectangular { nx, ny, .. } => (*ny, *nx),
            GridSpec::Polar { n_radii, n_angles, .. } => (*n_radii, *n_angles),
        }
    }

    pub fn len(&self) -> usize {
        let (r, c) = self.shape();
        r * c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell widths `(Δre, Δim)` of a rectangular grid.
    pub fn cell_size(&self) -> Option<(f64, f64)> {
        match self {
            GridSpec::Rectangular { re, im, nx, ny } => {
                Some(((re[1] - re[0]) / *nx as f64, (im[1] - im[0]) / *ny as f64))
            }
            GridSpec::Polar { .. } => None,
        }
    }

    pub fn points(&self) -> Vec<Complex64> {
        match self {
            GridSpec::Rectangular { re, im, nx, ny } => {
                let (hx, hy) = self.cell_size().expect("rectangular");
                let mut v = Vec::with_capacity(nx * ny);
                for r in 0..*ny {
                    for c in 0..*nx {
                        v.push(Complex64::new(
                            re[0] + (c as f64 + 0.5) * hx,
                            im[0] + (r as f64 + 0.5) * hy,
                        ));
                    }
                }
                v
            }
            GridSpec::Polar {
                radius,
                n_radii,
                n_angles,
                log_spaced,
            } => {
                let t = |i: usize| {
                    if *n_radii == 1 {
                        0.0
                    } else {
                        i as f64 / (*n_radii - 1) as f64
                    }
                };
                let mut v = Vec::with_capacity(n_radii * n_angles);
                for i in 0..*n_radii {
                    let r = if *log_spaced {
                        (radius[0].ln() + t(i) * (radius[1].ln() - radius[0].ln())).exp()
                    } else {
                        radius[0] + t(i) * (radius[1] - radius[0])
                    };
                    for k in 0..*n_angles {
                        v.push(Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / *n_angles as f64));
                    }
                }
                v
            }
        }
    }

    /// 4-neighbours; polar grids wrap around in angle.
    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        let (rows, cols) = self.shape();
        let (r, c) = (k / cols, k % cols);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(k - cols);
        }
        if r + 1 < rows {
            out.push(k + cols);
        }
        match self {
            GridSpec::Rectangular { .. } => {
                if c > 0 {
                    out.push(k - 1);
                }
                if c + 1 < cols {
                    out.push(k + 1);
                }
            }
            GridSpec::Polar { .. } => {
                if cols > 1 {
                    out.push(r * cols + (c + cols - 1) % cols);
                    if cols > 2 {
                        out.push(r * cols + (c + 1) % cols);
                    }
                }
            }
        }
        out
    }
}

/// How grid points become evaluation points.
#[derive(Clone, Debug, PartialEq)]
pub enum ProbeMapping {
    /// Grid points are evaluation points in ℂ.
    Direct,
    /// Grid points are parameters, evaluated at their image on the curve.
    ThroughMap(RationalMap),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellClass {
    Bounded,
    Divergent,
    Inconclusive,
    /// Pole, exceptional point or evaluation failure.
    Skipped,
}

impl CellClass {
    pub fn code(self) -> i32 {
        match self {
            CellClass::Skipped => -1,
            CellClass::Inconclusive => 0,
            CellClass::Bounded => 1,
            CellClass::Divergent => 2,
        }
    }
}

impl From<Classification> for CellClass {
    fn from(c: Classification) -> Self {
        match c {
            Classification::Bounded => CellClass::Bounded,
            Classification::Divergent => CellClass::Divergent,
            Classification::Inconclusive => CellClass::Inconclusive,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    #[serde(with = "crate::wire::complex")]
    pub grid_point: Complex64,
    pub class: CellClass,
    #[serde(with = "crate::wire::extended_real_opt")]
    pub last_c: Option<f64>,
    #[serde(with = "crate::wire::extended_real_opt")]
    pub growth_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub d_min: usize,
    pub d_max: usize,
    pub policy: GrowthPolicy,
    pub min_component_size: usize,
    /// Curve points whose neighbourhood is skipped (detected exceptional set).
    #[serde(skip)]
    pub skip_points: Vec<Vec<Complex64>>,
    pub skip_radius: f64,
}

impl ScanOptions {
    pub fn new(d_min: usize, d_max: usize) -> Self {
        ScanOptions {
            d_min,
            d_max,
            policy: GrowthPolicy::default(),
            min_component_size: 4,
            skip_points: Vec::new(),
            skip_radius: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionScan {
    pub grid: GridSpec,
    pub family: String,
    pub d_min: usize,
    pub d_max: usize,
    pub policy: GrowthPolicy,
    pub min_component_size: usize,
    pub cells: Vec<ScanCell>,
    /// 4-connected components of Bounded cells, as cell indices.
    pub bounded_components: Vec<Vec<usize>>,
}

impl RegionScan {
    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().filter(|c| c.class == class).count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "re,im,code,last_c,growth_rate")?;
        for c in &self.cells {
            let opt = |x: Option<f64>| x.map_or_else(String::new, fmt_real);
            writeln!(
                out,
                "{:.17e},{:.17e},{},{},{}",
                c.grid_point.re,
                c.grid_point.im,
                c.class.code(),
                opt(c.last_c),
                opt(c.growth_rate)
            )?;
        }
        Ok(())
    }
}

/// Classify every grid point and extract the bounded components.
pub fn scan_region(
    measure: &DiscreteMeasure,
    family: &BasisFamily,
    grid: &GridSpec,
    probe: &ProbeMapping,
    options: &ScanOptions,
) -> Result<RegionScan> {
    grid.validate()?;
    options.policy.validate()?;
    check_coupling(measure, options.d_max)?;
    check_range(options.d_min, options.d_max)?;
    let system = OrthonormalSystem::build(measure, family, options.d_max)?;
    let points = grid.points();
    let cells: Vec<ScanCell> = points
        .par_iter()
        .map(|&z| scan_cell(&system, z, probe, options))
        .collect();
    let bounded_components = components(grid, &cells, options.min_component_size);
    Ok(RegionScan {
        grid: grid.clone(),
        family: family.name(),
        d_min: options.d_min,
        d_max: options.d_max,
        policy: options.policy,
        min_component_size: options.min_component_size,
        cells,
        bounded_components,
    })
}

fn scan_cell(system: &OrthonormalSystem, z: Complex64, probe: &ProbeMapping, opt: &ScanOptions) -> ScanCell {
    let skipped = ScanCell {
        grid_point: z,
        class: CellClass::Skipped,
        last_c: None,
        growth_rate: None,
    };
    let point = match probe {
        ProbeMapping::Direct => vec![z],
        ProbeMapping::ThroughMap(map) => match map.eval(z) {
            Ok(p) => p,
            Err(_) => return skipped,
        },
    };
    let near_exceptional = opt.skip_points.iter().any(|a| {
        a.iter()
            .zip(&point)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
            < opt.skip_radius
    });
    if near_exceptional {
        return skipped;
    }
    match report_from_system(system, &point, opt.d_min, &opt.policy) {
        Ok(r) => ScanCell {
            grid_point: z,
            class: r.fit.classification.into(),
            last_c: Some(r.last_constant()),
            growth_rate: r.fit.growth_rate,
        },
        Err(_) => skipped,
    }
}

fn components(grid: &GridSpec, cells: &[ScanCell], min_size: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; cells.len()];
    let mut out = Vec::new();
    for start in 0..cells.len() {
        if seen[start] || cells[start].class != CellClass::Bounded {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            comp.push(k);
            for nb in grid.neighbors(k) {
                if !seen[nb] && cells[nb].class == CellClass::Bounded {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        if comp.len() >= min_size {
            comp.sort_unstable();
            out.push(comp);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseChange {
    #[serde(with = "crate::wire::complex")]
    pub alpha: Complex64,
    pub d: usize,
    /// Parameter-side degree `d · deg P`.
    pub param_degree: usize,
    pub c_curve: f64,
    pub c_param: f64,
}

impl BaseChange {
    /// `c_curve ≤ c_param` up to the relative tolerance.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.c_curve <= self.c_param * (1.0 + rel_tol)
    }
}

/// Largest total degree of a coordinate, counting denominators.
pub fn map_degree(map: &RationalMap) -> usize {
    map.coords()
        .iter()
        .map(|c| c.num.degree().max(c.den.degree()))
        .max()
        .unwrap_or(0)
}

/// Parameter-side family whose degree-`D` span contains every pullback of a
/// degree-`d` curve monomial when `D = d · deg P`.
pub fn parameter_family(map: &RationalMap) -> BasisFamily {
    if map.is_polynomial() {
        BasisFamily::ParameterPolynomials
    } else {
        let mut poles: Vec<Complex64> = Vec::new();
        for &s in map.poles() {
            if !poles.iter().any(|p| (p - s).norm() < 1e-8) {
                poles.push(s);
            }
        }
        BasisFamily::ParameterRational { poles, order_cap: None }
    }
}

/// `C_d(P(α))` over curve monomials on `μ` against `C_D(α)` over the
/// parameter family on `ν`, `D = d · deg P`.
pub fn compare_base_change(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    map: &RationalMap,
    alpha: Complex64,
    d: usize,
) -> Result<BaseChange> {
    let point = map.eval(alpha)?;
    let big_d = d * map_degree(map);
    let curve = OrthonormalSystem::build(mu, &BasisFamily::CurveMonomials { dim: map.dim() }, d)?;
    let param = OrthonormalSystem::build(nu, &parameter_family(map), big_d)?;
    Ok(BaseChange {
        alpha,
        d,
        param_degree: big_d,
        c_curve: curve.constants(&point)?[d],
        c_param: param.constants(&[alpha])?[big_d],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationAgreement {
    #[serde(with = "crate::wire::complex")]
    pub alpha: Complex64,
    pub curve: BpeReport,
    /// Parameter side at the coupled degrees `d · deg P`.
    pub param: BpeReport,
    /// Curve side augmented by the complement monomials of the pullback
    /// algebra, evaluated on the parameter side; polynomial maps only.
    pub augmented: Option<BpeReport>,
    pub agree: bool,
}

/// Classify the boundedness of `α` on both sides of the parametrization.
pub fn classification_agreement(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    map: &RationalMap,
    alpha: Complex64,
    d_min: usize,
    d_max: usize,
    policy: &GrowthPolicy,
) -> Result<ClassificationAgreement> {
    let deg = map_degree(map).max(1);
    check_coupling(mu, d_max)?;
    check_coupling(nu, d_max * deg)?;
    check_range(d_min, d_max)?;
    let point = map.eval(alpha)?;
    let curve = bpe_sequence(mu, &BasisFamily::CurveMonomials { dim: map.dim() }, &point, d_min, d_max, policy)?;

    let param_sys = OrthonormalSystem::build(nu, &parameter_family(map), d_max * deg)?;
    let all = param_sys.constants(&[alpha])?;
    let degrees: Vec<usize> = (d_min..=d_max).map(|d| d * deg).collect();
    let constants: Vec<f64> = degrees.iter().map(|&d| all[d]).collect();
    let param = BpeReport {
        point: vec![alpha],
        family: param_sys.family().name(),
        ranks: degrees.iter().map(|&d| param_sys.rank(d)).collect(),
        fit: classify_growth(&constants, &degrees, policy)?,
        degrees,
        constants,
        policy: *policy,
    };

    let augmented = if map.is_polynomial() {
        let cap = (2 * deg).max(20);
        let gaps = map.pullback_complement(cap)?;
        let fam = BasisFamily::PulledBackMonomials {
            map: map.clone(),
            extra: gaps.into_iter().map(Poly::monomial).collect(),
        };
        Some(bpe_sequence(nu, &fam, &[alpha], d_min, d_max, policy)?)
    } else {
        None
    };
    let mut agree = curve.classification() == param.classification();
    if let Some(a) = &augmented {
        agree &= a.classification() == curve.classification();
    }
    Ok(ClassificationAgreement {
        alpha,
        curve,
        param,
        augmented,
        agree,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DensityVerdict {
    /// The span reaches every function on the nodes.
    SaturatesNodeSpace { degree: usize },
    /// The span stays a proper subspace up to `d_max`.
    StrictSubspace { d_max: usize, deficit: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    #[serde(flatten)]
    pub verdict: DensityVerdict,
    pub node_count: usize,
    pub exactness_order: usize,
    /// Degree of the parametrization, used by the guard.
    pub param_degree: usize,
    /// Numerical rank for `d = 0..=d_max`.
    pub ranks: Vec<usize>,
}

impl DensityReport {
    pub fn saturates(&self) -> bool {
        matches!(self.verdict, DensityVerdict::SaturatesNodeSpace { .. })
    }
}

/// Track the rank of the degree-`d` span against the node count. Only
/// meaningful while `2 · param_degree · d_max ≤ N`, which is enforced.
pub fn density_verdict(
    measure: &DiscreteMeasure,
    family: &BasisFamily,
    d_max: usize,
    param_degree: usize,
) -> Result<DensityReport> {
    let exactness_order = match measure.semantics() {
        Semantics::Atomic => return Err(Error::AtomicMeasure),
        Semantics::QuadratureOfContinuous { exactness_order } => exactness_order,
    };
    let required = 2 * param_degree.max(1) * d_max;
    if exactness_order < required {
        return Err(Error::QuadratureTooCoarse {
            exactness: exactness_order,
            degree: d_max,
            required,
        });
    }
    let system = OrthonormalSystem::build(measure, family, d_max)?;
    let node_count = measure.distinct_node_count();
    let ranks: Vec<usize> = (0..=d_max).map(|d| system.rank(d)).collect();
    let verdict = match ranks.iter().position(|&r| r >= node_count) {
        Some(degree) => DensityVerdict::SaturatesNodeSpace { degree },
        None => DensityVerdict::StrictSubspace {
            d_max,
            deficit: node_count - ranks[d_max],
        },
    };
    Ok(DensityReport {
        verdict,
        node_count,
        exactness_order,
        param_degree,
        ranks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{pushforward, uniform_circle_measure};
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn classify_examples() {
        let p = GrowthPolicy::default();
        let degs: Vec<usize> = (0..6).collect();
        let f = classify_growth(&[1.0; 6], &degs, &p).unwrap();
        assert_eq!(f.classification, Classification::Bounded);
        assert_eq!(f.limit_estimate, Some(1.0));

        let degs: Vec<usize> = (0..10).collect();
        let geo: Vec<f64> = (0..10).map(|k| 1.2f64.powi(k)).collect();
        let f = classify_growth(&geo, &degs, &p).unwrap();
        assert_eq!(f.classification, Classification::Divergent);
        assert_eq!(f.growth_kind, GrowthKind::Exponential);
        assert!((f.growth_rate.unwrap() - 1.2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn classify_errors() {
        let p = GrowthPolicy::default();
        assert!(matches!(
            classify_growth(&[1.0; 5], &[0, 1, 2, 3, 4], &p),
            Err(Error::TooFewPoints { needed: 6, got: 5 })
        ));
        assert!(matches!(
            classify_growth(&[1.0, 2.0, 1.5, 3.0, 4.0, 5.0], &[0, 1, 2, 3, 4, 5], &p),
            Err(Error::NotMonotone { index: 2 })
        ));
        let inf = classify_growth(&[1.0, 2.0, 3.0, f64::INFINITY, f64::INFINITY, f64::INFINITY], &[0, 1, 2, 3, 4, 5], &p)
            .unwrap();
        assert_eq!(inf.growth_kind, GrowthKind::Unbounded);
    }

    #[test]
    fn square_root_growth_is_algebraic() {
        let degs: Vec<usize> = (0..=30).collect();
        let cs: Vec<f64> = degs.iter().map(|&d| ((2 * d + 1) as f64 / TAU).sqrt()).collect();
        let f = classify_growth(&cs, &degs, &GrowthPolicy::default()).unwrap();
        assert_eq!(f.classification, Classification::Divergent);
        assert_eq!(f.growth_kind, GrowthKind::Algebraic);
    }

    #[test]
    fn szego_sequence_is_bounded() {
        let m = uniform_circle_measure(1.0, 256, TAU).unwrap();
        let r = bpe_sequence(&m, &BasisFamily::ParameterPolynomials, &[c(0.9, 0.0)], 10, 60, &GrowthPolicy::default())
            .unwrap();
        assert_eq!(r.classification(), Classification::Bounded);
        let exact = (1.0 / (TAU * (1.0 - 0.81))).sqrt();
        assert!((r.fit.limit_estimate.unwrap() - exact).abs() < 0.02 * exact);
        let r = bpe_sequence(&m, &BasisFamily::ParameterPolynomials, &[c(1.1, 0.0)], 10, 60, &GrowthPolicy::default())
            .unwrap();
        assert_eq!(r.classification(), Classification::Divergent);
    }

    #[test]
    fn coupling_is_enforced() {
        let m = uniform_circle_measure(1.0, 40, TAU).unwrap();
        assert!(matches!(
            bpe_sequence(&m, &BasisFamily::ParameterPolynomials, &[c(0.0, 0.0)], 0, 10, &GrowthPolicy::default()),
            Err(Error::QuadratureTooCoarse { required: 41, .. })
        ));
        let atoms = DiscreteMeasure::new(1, vec![vec![c(0.0, 0.0)]], vec![1.0], Semantics::Atomic, "").unwrap();
        assert!(matches!(check_coupling(&atoms, 1), Err(Error::AtomicMeasure)));
    }

    #[test]
    fn circle_scan_finds_the_disk() {
        let m = uniform_circle_measure(1.0, 161, TAU).unwrap();
        let grid = GridSpec::square(-1.5, 1.5, 15);
        let scan = scan_region(&m, &BasisFamily::ParameterPolynomials, &grid, &ProbeMapping::Direct, &ScanOptions::new(10, 40))
            .unwrap();
        assert_eq!(scan.bounded_components.len(), 1);
        for (cell, z) in scan.cells.iter().zip(grid.points()) {
            if z.norm() < 0.8 {
                assert_eq!(cell.class, CellClass::Bounded, "{z}");
            }
            if z.norm() > 1.2 {
                assert_eq!(cell.class, CellClass::Divergent, "{z}");
            }
        }
        let mut csv = Vec::new();
        scan.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("re,im,code,last_c,growth_rate\n"));
        assert_eq!(text.lines().count(), grid.len() + 1);
    }

    #[test]
    fn polar_neighbours_wrap() {
        let g = GridSpec::Polar {
            radius: [0.5, 2.0],
            n_radii: 3,
            n_angles: 4,
            log_spaced: true,
        };
        let mut nb = g.neighbors(4);
        nb.sort();
        assert_eq!(nb, vec![0, 5, 7, 8]);
        let pts = g.points();
        assert!((pts[4] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn base_change_examples() {
        let map = RationalMap::monomial(&[2, 3]);
        let nu = uniform_circle_measure(1.0, 128, TAU).unwrap();
        let mu = pushforward(&nu, &map).unwrap();
        let b = compare_base_change(&mu, &nu, &map, c(0.5, 0.0), 6).unwrap();
        assert!(b.holds(1e-9) && b.param_degree == 18);
        let b = compare_base_change(&mu, &nu, &map, c(0.0, 0.0), 6).unwrap();
        assert!((b.c_curve - 1.0 / TAU.sqrt()).abs() < 1e-12);
        assert!((b.c_param - 1.0 / TAU.sqrt()).abs() < 1e-12);
        let b = compare_base_change(&mu, &nu, &map, c(0.7, -0.2), 0).unwrap();
        assert!((b.c_curve - TAU.powf(-0.5)).abs() < 1e-12 && (b.c_param - TAU.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn density_examples() {
        let nu = uniform_circle_measure(1.0, 33, TAU).unwrap();
        let mu = pushforward(&nu, &RationalMap::hyperbola()).unwrap();
        let r = density_verdict(&mu, &BasisFamily::CurveMonomials { dim: 2 }, 16, 1).unwrap();
        assert_eq!(r.verdict, DensityVerdict::SaturatesNodeSpace { degree: 16 });
        let r = density_verdict(&nu, &BasisFamily::ParameterPolynomials, 16, 1).unwrap();
        assert_eq!(r.verdict, DensityVerdict::StrictSubspace { d_max: 16, deficit: 16 });
        assert!(density_verdict(&nu, &BasisFamily::ParameterPolynomials, 17, 1).is_err());

        let cusp = RationalMap::monomial(&[2, 3]);
        let nu = uniform_circle_measure(1.0, 64, TAU).unwrap();
        let mu = pushforward(&nu, &cusp).unwrap();
        let r = density_verdict(&mu, &BasisFamily::CurveMonomials { dim: 2 }, 10, 3).unwrap();
        assert!(!r.saturates());
    }
}
