//! Rational parametrizations of affine curves: evaluation, numerical fiber
//! inversion, a sampled properness diagnostic and the finite codimension of
//! the pullback algebra for polynomial maps.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::wire::{self, Pair};

/// Points closer than this to a pole are rejected by [`RationalMap::eval`].
pub const POLE_TOLERANCE: f64 = 1e-10;
/// Fiber roots closer than this are merged.
pub const FIBER_DEDUP_TOLERANCE: f64 = 1e-8;
/// Singular values below `max * CODIM_RANK_THRESHOLD` count as zero.
pub const CODIM_RANK_THRESHOLD: f64 = 1e-10;

const COMMON_ROOT_TOLERANCE: f64 = 1e-8;

/// One coordinate `num(ζ) / den(ζ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFunction {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Invalid("denominator is the zero polynomial".into()));
        }
        let f = RationalFunction { num, den };
        if !f.den.is_constant() && !f.num.is_zero() {
            let scale = f.num.max_abs_coeff();
            for r in f.den.roots() {
                if f.num.eval(r).norm() <= COMMON_ROOT_TOLERANCE * scale.max(1.0) {
                    return Err(Error::Invalid(format!(
                        "numerator and denominator share the root {r}"
                    )));
                }
            }
        }
        Ok(f)
    }

    pub fn polynomial(num: Poly) -> Self {
        RationalFunction {
            num,
            den: Poly::one(),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    /// `max(deg num, deg den)`.
    pub fn degree(&self) -> usize {
        self.num.degree().max(self.den.degree())
    }

    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Derivative `(num' den - num den') / den^2` evaluated at `z`.
    pub fn eval_derivative(&self, z: Complex64) -> Complex64 {
        let d = self.den.eval(z);
        (self.num.derivative().eval(z) * d - self.num.eval(z) * self.den.derivative().eval(z))
            / (d * d)
    }

    /// For polynomial coordinates, the polynomial itself (denominator folded in).
    pub fn as_polynomial(&self) -> Option<Poly> {
        if !self.is_polynomial() {
            return None;
        }
        Some(self.num.scale(Complex64::new(1.0, 0.0) / self.den.coeffs()[0]))
    }
}

/// An n-tuple of rational functions of one complex variable ζ.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap {
    coords: Vec<RationalFunction>,
    poles: Vec<Complex64>,
}

impl RationalMap {
    pub fn new(coords: Vec<RationalFunction>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Invalid("a map needs at least one coordinate".into()));
        }
        let mut poles: Vec<Complex64> = Vec::new();
        for c in &coords {
            for r in c.den.roots() {
                if !poles.iter().any(|p| (p - r).norm() < FIBER_DEDUP_TOLERANCE) {
                    poles.push(r);
                }
            }
        }
        Ok(RationalMap { coords, poles })
    }

    /// Map with polynomial coordinates given by real coefficient lists.
    pub fn polynomial(coords: &[&[f64]]) -> Self {
        Self::new(
            coords
                .iter()
                .map(|c| RationalFunction::polynomial(Poly::from_real(c)))
                .collect(),
        )
        .expect("polynomial coordinates are always valid")
    }

    /// `(ζ^a_1, ..., ζ^a_n)`.
    pub fn monomial(exponents: &[usize]) -> Self {
        Self::new(
            exponents
                .iter()
                .map(|&k| RationalFunction::polynomial(Poly::monomial(k)))
                .collect(),
        )
        .expect("monomial coordinates are always valid")
    }

    /// The identity map ζ ↦ ζ.
    pub fn identity() -> Self {
        Self::monomial(&[1])
    }

    /// `(ζ, 1/ζ)`, parametrizing the hyperbola `z1 z2 = 1`.
    pub fn hyperbola() -> Self {
        Self::new(vec![
            RationalFunction::polynomial(Poly::monomial(1)),
            RationalFunction::new(Poly::one(), Poly::monomial(1)).expect("valid"),
        ])
        .expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[RationalFunction] {
        &self.coords
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn is_polynomial(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.coords.iter().map(|c| c.degree()).max().unwrap_or(0)
    }

    pub fn nearest_pole(&self, zeta: Complex64) -> Option<(Complex64, f64)> {
        self.poles
            .iter()
            .map(|&p| (p, (zeta - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn eval(&self, zeta: Complex64) -> Result<Vec<Complex64>> {
        self.eval_with_tolerance(zeta, POLE_TOLERANCE)
    }

    pub fn eval_with_tolerance(&self, zeta: Complex64, pole_tolerance: f64) -> Result<Vec<Complex64>> {
        if let Some((pole, dist)) = self.nearest_pole(zeta) {
            if dist < pole_tolerance {
                return Err(Error::PoleProximity {
                    point: zeta,
                    pole,
                    tolerance: pole_tolerance,
                });
            }
        }
        Ok(self.coords.iter().map(|c| c.eval_unchecked(zeta)).collect())
    }

    /// Numerically invert the map at `target`.
    pub fn fiber(&self, target: &[Complex64], tol: f64) -> Result<FiberReport> {
        if target.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: target.len(),
            });
        }
        if !(tol > 0.0) {
            return Err(Error::Invalid("fiber tolerance must be positive".into()));
        }
        let empty = |target: &[Complex64]| FiberReport {
            target: target.to_vec(),
            solutions: Vec::new(),
            residuals: Vec::new(),
            empty_fiber: true,
        };

        // constant coordinates either rule the target out or carry no information
        let mut order: Vec<usize> = Vec::new();
        for (i, c) in self.coords.iter().enumerate() {
            if c.is_constant() {
                if (c.eval_unchecked(Complex64::new(0.0, 0.0)) - target[i]).norm() > tol {
                    return Ok(empty(target));
                }
            } else {
                order.push(i);
            }
        }
        if order.is_empty() {
            return Err(Error::DegenerateEquation);
        }
        // lowest degree first keeps the number of spurious roots down
        order.sort_by_key(|&i| self.coords[i].degree());
        let lead = &self.coords[order[0]];
        let equation = &lead.num - &lead.den.scale(target[order[0]]);

        let mut solutions: Vec<Complex64> = Vec::new();
        let mut residuals: Vec<f64> = Vec::new();
        for root in equation.roots() {
            if self
                .nearest_pole(root)
                .is_some_and(|(_, d)| d < POLE_TOLERANCE)
            {
                continue;
            }
            let res = self
                .coords
                .iter()
                .zip(target)
                .map(|(c, t)| (c.eval_unchecked(root) - t).norm())
                .fold(0.0, f64::max);
            if !(res <= tol) {
                continue;
            }
            // multiple roots split by about sqrt(eps) in the companion eigenvalues
            let radius = FIBER_DEDUP_TOLERANCE.max(4.0 * f64::EPSILON.sqrt() * (1.0 + root.norm()));
            match solutions.iter().position(|s| (s - root).norm() <= radius) {
                Some(k) => {
                    if res < residuals[k] {
                        solutions[k] = root;
                        residuals[k] = res;
                    }
                }
                None => {
                    solutions.push(root);
                    residuals.push(res);
                }
            }
        }
        Ok(FiberReport {
            target: target.to_vec(),
            empty_fiber: solutions.is_empty(),
            solutions,
            residuals,
        })
    }

    /// Sample the parameter plane and record every image whose fiber has
    /// more than one point. The result estimates the exceptional set; it is
    /// not a certificate.
    pub fn properness_diagnostic(&self, sample_count: usize, seed: u64) -> Result<PropernessReport> {
        if sample_count == 0 {
            return Err(Error::Invalid("sample_count must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radius = 2.0 * self.poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
        let mut multi = Vec::new();
        let mut max_card = 0;
        let mut taken = 0;
        while taken < sample_count {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            let zeta = Complex64::from_polar(r, theta);
            if self.nearest_pole(zeta).is_some_and(|(_, d)| d < 1e-3) {
                continue;
            }
            taken += 1;
            let image = self.eval(zeta)?;
            let scale = image.iter().map(|z| z.norm()).fold(1.0, f64::max);
            let fib = self.fiber(&image, 1e-8 * scale)?;
            let card = fib.solutions.len().max(1);
            max_card = max_card.max(card);
            if card >= 2 {
                multi.push(MultiFiberPoint {
                    sample: zeta,
                    image,
                    preimages: fib.solutions,
                });
            }
        }
        Ok(PropernessReport {
            sampled_points: sample_count,
            multi_fiber_points: multi,
            max_fiber_cardinality: max_card,
            certified: false,
        })
    }

    /// Codimension of the pullback of ambient polynomials inside
    /// `{1, ζ, ..., ζ^cap}`, tracked for every cap up to `degree_cap` and
    /// reported once it has stopped changing.
    pub fn pullback_codimension(&self, degree_cap: usize) -> Result<CodimensionReport> {
        let polys: Vec<Poly> = self
            .coords
            .iter()
            .map(|c| c.as_polynomial().ok_or(Error::NotPolynomial))
            .collect::<Result<_>>()?;
        let degrees: Vec<usize> = polys.iter().map(|p| p.degree()).collect();
        let max_deg = degrees.iter().copied().max().unwrap_or(0);
        if degree_cap < max_deg {
            return Err(Error::Invalid(format!(
                "degree_cap {degree_cap} below the maximal coordinate degree {max_deg}"
            )));
        }
        if max_deg == 0 {
            return Err(Error::Invalid("every coordinate is constant".into()));
        }

        let mut trajectory = Vec::new();
        for cap in max_deg..=degree_cap {
            let rank = pullback_rank(&polys, &degrees, cap);
            trajectory.push(CodimensionStep {
                cap,
                codimension: cap + 1 - rank,
            });
        }
        let last = trajectory.last().expect("non-empty").codimension;
        let start = trajectory
            .iter()
            .rposition(|s| s.codimension != last)
            .map_or(0, |k| k + 1);
        let stabilized_at = trajectory[start].cap;
        if degree_cap - stabilized_at < max_deg {
            let recent = trajectory
                .iter()
                .rev()
                .take(max_deg + 1)
                .map(|s| s.codimension)
                .collect();
            return Err(Error::NoStabilization {
                cap: degree_cap,
                recent,
            });
        }
        Ok(CodimensionReport {
            codimension: last,
            stabilized_at,
            trajectory,
        })
    }
}

impl RationalMap {
    /// Exponents `g` such that `ζ^g` together with the pullbacks spans all
    /// polynomials of degree ≤ the stabilization cap; chosen greedily from
    /// the lowest degree up. Their number is the codimension.
    pub fn pullback_complement(&self, degree_cap: usize) -> Result<Vec<usize>> {
        let report = self.pullback_codimension(degree_cap)?;
        let polys: Vec<Poly> = self
            .coords
            .iter()
            .map(|c| c.as_polynomial().expect("checked polynomial"))
            .collect();
        let degrees: Vec<usize> = polys.iter().map(|p| p.degree()).collect();
        let cap = report.stabilized_at;
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        let mut alpha = vec![0usize; polys.len()];
        collect_pullbacks(&polys, &degrees, cap, 0, &mut alpha, &mut rows);
        let mut rank = numerical_rank(&rows, cap);
        let mut gaps = Vec::new();
        for g in 0..=cap {
            if gaps.len() == report.codimension {
                break;
            }
            let mut e = vec![Complex64::new(0.0, 0.0); g + 1];
            e[g] = Complex64::new(1.0, 0.0);
            rows.push(e);
            let r = numerical_rank(&rows, cap);
            if r > rank {
                rank = r;
                gaps.push(g);
            } else {
                rows.pop();
            }
        }
        Ok(gaps)
    }
}

fn pullback_rank(polys: &[Poly], degrees: &[usize], cap: usize) -> usize {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut alpha = vec![0usize; polys.len()];
    collect_pullbacks(polys, degrees, cap, 0, &mut alpha, &mut rows);
    numerical_rank(&rows, cap)
}

fn numerical_rank(rows: &[Vec<Complex64>], cap: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), cap + 1, |i, j| {
        rows[i].get(j).copied().unwrap_or_default()
    });
    let sv = SVD::new(m, false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > smax * CODIM_RANK_THRESHOLD).count()
}

/// Enumerate `P*(z^α)` for every α whose pulled-back degree fits in `budget`,
/// as unit-norm coefficient rows.
fn collect_pullbacks(
    polys: &[Poly],
    degrees: &[usize],
    budget: usize,
    i: usize,
    alpha: &mut Vec<usize>,
    rows: &mut Vec<Vec<Complex64>>,
) {
    if i == polys.len() {
        let mut p = Poly::one();
        for (q, &k) in polys.iter().zip(alpha.iter()) {
            p = &p * &q.pow(k as u32);
        }
        let norm = p.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        rows.push(p.coeffs().iter().map(|c| c / norm).collect());
        return;
    }
    // constant coordinates add nothing beyond the constants
    let max_k = if degrees[i] == 0 { 0 } else { budget / degrees[i] };
    for k in 0..=max_k {
        alpha[i] = k;
        collect_pullbacks(polys, degrees, budget - k * degrees[i], i + 1, alpha, rows);
    }
    alpha[i] = 0;
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberReport {
    #[serde(with = "wire::complex_vec")]
    pub target: Vec<Complex64>,
    #[serde(with = "wire::complex_vec")]
    pub solutions: Vec<Complex64>,
    pub residuals: Vec<f64>,
    pub empty_fiber: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiFiberPoint {
    #[serde(with = "wire::complex")]
    pub sample: Complex64,
    #[serde(with = "wire::complex_vec")]
    pub image: Vec<Complex64>,
    #[serde(with = "wire::complex_vec")]
    pub preimages: Vec<Complex64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropernessReport {
    pub sampled_points: usize,
    pub multi_fiber_points: Vec<MultiFiberPoint>,
    pub max_fiber_cardinality: usize,
    /// Always false: the exceptional set is estimated from samples.
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodimensionStep {
    pub cap: usize,
    pub codimension: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodimensionReport {
    pub codimension: usize,
    pub stabilized_at: usize,
    pub trajectory: Vec<CodimensionStep>,
}

#[derive(Serialize, Deserialize)]
struct CoordWire {
    num: Vec<Pair>,
    den: Vec<Pair>,
}

#[derive(Serialize, Deserialize)]
struct MapWire {
    coords: Vec<CoordWire>,
}

impl Serialize for RationalMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs = |p: &Poly| -> Vec<Pair> {
            if p.is_zero() {
                vec![[0.0, 0.0]]
            } else {
                p.coeffs().iter().copied().map(wire::to_pair).collect()
            }
        };
        MapWire {
            coords: self
                .coords
                .iter()
                .map(|c| CoordWire {
                    num: pairs(&c.num),
                    den: pairs(&c.den),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = MapWire::deserialize(d)?;
        let poly = |v: Vec<Pair>| Poly::new(v.into_iter().map(wire::from_pair).collect());
        let coords = w
            .coords
            .into_iter()
            .map(|c| RationalFunction::new(poly(c.num), poly(c.den)))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        RationalMap::new(coords).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let cusp = RationalMap::monomial(&[2, 3]);
        assert_eq!(cusp.eval(c(1.0, 0.0)).unwrap(), vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let hyp = RationalMap::hyperbola();
        let v = hyp.eval(c(2.0, 0.0)).unwrap();
        assert!((v[0] - c(2.0, 0.0)).norm() < 1e-15 && (v[1] - c(0.5, 0.0)).norm() < 1e-15);
        assert!(matches!(
            hyp.eval(c(0.0, 0.0)),
            Err(Error::PoleProximity { .. })
        ));
        assert!(hyp.eval(c(1e-11, 0.0)).is_err());
        assert!(hyp.eval(c(1e-9, 0.0)).is_ok());
    }

    #[test]
    fn pole_set() {
        assert!(RationalMap::monomial(&[2, 3]).poles().is_empty());
        let hyp = RationalMap::hyperbola();
        assert_eq!(hyp.poles().len(), 1);
        assert!(hyp.poles()[0].norm() < 1e-14);
        assert!(!hyp.is_polynomial());
    }

    #[test]
    fn rejects_common_root_and_zero_denominator() {
        // (ζ - 1) / (ζ - 1)
        let f = RationalFunction::new(
            Poly::linear_factor(c(1.0, 0.0)),
            Poly::linear_factor(c(1.0, 0.0)),
        );
        assert!(f.is_err());
        assert!(RationalFunction::new(Poly::one(), Poly::zero()).is_err());
    }

    #[test]
    fn fiber_examples() {
        let cusp = RationalMap::monomial(&[2, 3]);
        let f = cusp.fiber(&[c(1.0, 0.0), c(1.0, 0.0)], 1e-8).unwrap();
        assert_eq!(f.solutions.len(), 1);
        assert!((f.solutions[0] - c(1.0, 0.0)).norm() < 1e-12);

        let f = cusp.fiber(&[c(1.0, 0.0), c(-1.0, 0.0)], 1e-8).unwrap();
        assert_eq!(f.solutions.len(), 1);
        assert!((f.solutions[0] - c(-1.0, 0.0)).norm() < 1e-12);

        let f = RationalMap::hyperbola()
            .fiber(&[c(2.0, 0.0), c(0.5, 0.0)], 1e-8)
            .unwrap();
        assert_eq!(f.solutions.len(), 1);
        assert!((f.solutions[0] - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn fiber_of_singular_point_merges_double_root() {
        let cusp = RationalMap::monomial(&[2, 3]);
        let f = cusp.fiber(&[c(0.0, 0.0), c(0.0, 0.0)], 1e-8).unwrap();
        assert_eq!(f.solutions.len(), 1);
    }

    #[test]
    fn fiber_off_curve_is_empty() {
        let f = RationalMap::hyperbola()
            .fiber(&[c(1.0, 0.0), c(5.0, 0.0)], 1e-8)
            .unwrap();
        assert!(f.empty_fiber);
    }

    #[test]
    fn fiber_skips_constant_coordinate() {
        let m = RationalMap::polynomial(&[&[3.0], &[0.0, 1.0]]);
        let f = m.fiber(&[c(3.0, 0.0), c(0.5, 0.5)], 1e-8).unwrap();
        assert_eq!(f.solutions.len(), 1);
        let f = m.fiber(&[c(2.0, 0.0), c(0.5, 0.5)], 1e-8).unwrap();
        assert!(f.empty_fiber);
        let constant = RationalMap::polynomial(&[&[3.0]]);
        assert!(matches!(
            constant.fiber(&[c(3.0, 0.0)], 1e-8),
            Err(Error::DegenerateEquation)
        ));
    }

    #[test]
    fn properness_examples() {
        let r = RationalMap::monomial(&[2, 3]).properness_diagnostic(100, 7).unwrap();
        assert!(r.multi_fiber_points.is_empty());
        assert_eq!(r.max_fiber_cardinality, 1);
        assert!(!r.certified);

        let r = RationalMap::monomial(&[2, 4]).properness_diagnostic(100, 7).unwrap();
        assert_eq!(r.max_fiber_cardinality, 2);

        let r = RationalMap::monomial(&[1, 1]).properness_diagnostic(10, 7).unwrap();
        assert_eq!(r.max_fiber_cardinality, 1);
    }

    #[test]
    fn codimension_examples() {
        let r = RationalMap::monomial(&[2, 3]).pullback_codimension(12).unwrap();
        assert_eq!(r.codimension, 1);
        let r = RationalMap::monomial(&[1, 2]).pullback_codimension(12).unwrap();
        assert_eq!(r.codimension, 0);
        let r = RationalMap::monomial(&[2, 5]).pullback_codimension(20).unwrap();
        assert_eq!(r.codimension, 2);
    }

    #[test]
    fn complement_is_semigroup_gaps() {
        assert_eq!(RationalMap::monomial(&[2, 3]).pullback_complement(12).unwrap(), vec![1]);
        assert_eq!(RationalMap::monomial(&[2, 5]).pullback_complement(20).unwrap(), vec![1, 3]);
        assert!(RationalMap::monomial(&[1, 2]).pullback_complement(12).unwrap().is_empty());
    }

    #[test]
    fn codimension_errors() {
        assert!(matches!(
            RationalMap::hyperbola().pullback_codimension(10),
            Err(Error::NotPolynomial)
        ));
        // non-injective map: odd powers never come back
        assert!(matches!(
            RationalMap::monomial(&[2, 4]).pullback_codimension(12),
            Err(Error::NoStabilization { .. })
        ));
        assert!(RationalMap::monomial(&[2, 5]).pullback_codimension(3).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = RationalMap::hyperbola();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"coords":[{"num":[[0.0,0.0],[1.0,0.0]],"den":[[1.0,0.0]]},{"num":[[1.0,0.0]],"den":[[0.0,0.0],[1.0,0.0]]}]}"#);
        let back: RationalMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
