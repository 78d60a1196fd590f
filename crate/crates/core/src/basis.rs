//! Finite bases of test functions, either monomials in the ambient
//! coordinates restricted to the curve or functions of the parameter.
//!
//! A [`BasisSpec`] is one truncation level. A [`BasisFamily`] is the nested
//! sequence of levels used by degree sweeps, presented as a ladder in which
//! every element is a parent element times a simple multiplier.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{RationalMap, POLE_TOLERANCE};
use crate::error::{Error, Result};
use crate::poly::Poly;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleTerm {
    #[serde(with = "crate::wire::complex")]
    pub pole: Complex64,
    pub max_order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisSpec {
    CurveMonomials { dim: usize, degree: usize },
    ParameterPolynomials { degree: usize },
    ParameterRational { degree: usize, pole_terms: Vec<PoleTerm> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasisElement {
    /// `z^α` on ℂⁿ.
    Monomial(Vec<u32>),
    /// `ζ^k`.
    Power(usize),
    /// `(ζ - pole)^{-order}`.
    Pole { pole: Complex64, order: usize },
}

impl fmt::Display for BasisElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisElement::Monomial(alpha) => {
                let parts: Vec<String> = alpha
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| match k {
                        1 => format!("z{}", i + 1),
                        _ => format!("z{}^{k}", i + 1),
                    })
                    .collect();
                if parts.is_empty() {
                    write!(f, "1")
                } else {
                    write!(f, "{}", parts.join("*"))
                }
            }
            BasisElement::Power(0) => write!(f, "1"),
            BasisElement::Power(1) => write!(f, "ζ"),
            BasisElement::Power(k) => write!(f, "ζ^{k}"),
            BasisElement::Pole { pole, order } if *pole == Complex64::new(0.0, 0.0) => {
                write!(f, "ζ^-{order}")
            }
            BasisElement::Pole { pole, order } => write!(f, "(ζ-({pole}))^-{order}"),
        }
    }
}

impl BasisElement {
    pub fn eval(&self, x: &[Complex64]) -> Result<Complex64> {
        match self {
            BasisElement::Monomial(alpha) => Ok(alpha
                .iter()
                .zip(x)
                .fold(Complex64::new(1.0, 0.0), |acc, (&k, &xi)| acc * xi.powu(k))),
            BasisElement::Power(k) => Ok(x[0].powu(*k as u32)),
            BasisElement::Pole { pole, order } => {
                let diff = x[0] - pole;
                if diff.norm() < POLE_TOLERANCE {
                    return Err(Error::PoleProximity {
                        point: x[0],
                        pole: *pole,
                        tolerance: POLE_TOLERANCE,
                    });
                }
                Ok(diff.powi(-(*order as i32)))
            }
        }
    }
}

/// Exponents of total degree ≤ `degree` in `dim` variables, graded and
/// lexicographically descending within each degree: `1, z1, z2, z1², z1z2, …`.
pub fn graded_exponents(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut cur = vec![0u32; dim];
        fill_degree(&mut cur, 0, total as u32, &mut out);
    }
    out
}

fn fill_degree(cur: &mut Vec<u32>, i: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if i + 1 == cur.len() {
        cur[i] = remaining;
        out.push(cur.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        cur[i] = k;
        fill_degree(cur, i + 1, remaining - k, out);
    }
    cur[i] = 0;
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k.min(n - k)).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

impl BasisSpec {
    /// Dimension of the points the basis is evaluated at.
    pub fn point_dim(&self) -> usize {
        match self {
            BasisSpec::CurveMonomials { dim, .. } => *dim,
            _ => 1,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            BasisSpec::CurveMonomials { dim, degree } => binomial(dim + degree, *dim),
            BasisSpec::ParameterPolynomials { degree } => degree + 1,
            BasisSpec::ParameterRational { degree, pole_terms } => {
                degree + 1 + pole_terms.iter().map(|t| t.max_order).sum::<usize>()
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> Vec<BasisElement> {
        match self {
            BasisSpec::CurveMonomials { dim, degree } => graded_exponents(*dim, *degree)
                .into_iter()
                .map(BasisElement::Monomial)
                .collect(),
            BasisSpec::ParameterPolynomials { degree } => {
                (0..=*degree).map(BasisElement::Power).collect()
            }
            BasisSpec::ParameterRational { degree, pole_terms } => {
                let mut v: Vec<BasisElement> = (0..=*degree).map(BasisElement::Power).collect();
                for t in pole_terms {
                    for order in 1..=t.max_order {
                        v.push(BasisElement::Pole {
                            pole: t.pole,
                            order,
                        });
                    }
                }
                v
            }
        }
    }

    pub fn eval_vector(&self, point: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_point(point)?;
        self.elements().iter().map(|e| e.eval(point)).collect()
    }

    pub(crate) fn check_point(&self, point: &[Complex64]) -> Result<()> {
        if point.len() != self.point_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.point_dim(),
                got: point.len(),
            });
        }
        Ok(())
    }

    /// Per-element positive factors `D` such that `D·b` has entries of
    /// moderate size on a support with the given coordinate radii.
    /// Monomials use `∏ ρ_i^{-α_i}`; pole terms use `δ^k` with `δ` the
    /// distance from the pole to the support.
    pub(crate) fn scale_factors(&self, radii: &[f64], pole_distance: impl Fn(Complex64) -> f64) -> Vec<f64> {
        let safe = |r: f64| if r > 0.0 { r } else { 1.0 };
        self.elements()
            .iter()
            .map(|e| match e {
                BasisElement::Monomial(alpha) => alpha
                    .iter()
                    .zip(radii)
                    .map(|(&k, &r)| safe(r).powi(-(k as i32)))
                    .product(),
                BasisElement::Power(k) => safe(radii[0]).powi(-(*k as i32)),
                BasisElement::Pole { pole, order } => safe(pole_distance(*pole)).powi(*order as i32),
            })
            .collect()
    }
}

/// The factor turning a parent element into a child.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Multiplier {
    /// Coordinate `z_i` of the evaluation point.
    Coordinate(usize),
    /// Coordinate `i` of the map, evaluated at the parameter.
    MapCoordinate(usize),
    /// `1/(ζ - s)`.
    InversePole(Complex64),
}

/// How one element of a nested family is generated.
#[derive(Clone, Debug)]
pub enum ElementSource {
    /// The constant function.
    Root,
    /// `multiplier · parent`; any candidate spans the same space modulo
    /// earlier elements.
    Product(Vec<(usize, Multiplier)>),
    /// A parameter polynomial given explicitly.
    Explicit(Poly),
}

#[derive(Clone, Debug)]
pub struct LadderStep {
    pub source: ElementSource,
    /// Smallest truncation degree containing this element.
    pub level: usize,
    pub label: String,
}

/// Nested sequences of bases indexed by a truncation degree.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisFamily {
    CurveMonomials { dim: usize },
    ParameterPolynomials,
    /// Polynomials plus pole terms; the order at degree `d` is
    /// `min(d, order_cap)`.
    ParameterRational { poles: Vec<Complex64>, order_cap: Option<usize> },
    /// `ζ ↦ P(ζ)^α` on the parameter side, optionally augmented by fixed
    /// parameter polynomials present at every degree.
    PulledBackMonomials { map: RationalMap, extra: Vec<Poly> },
}

impl BasisFamily {
    pub fn point_dim(&self) -> usize {
        match self {
            BasisFamily::CurveMonomials { dim } => *dim,
            _ => 1,
        }
    }

    pub fn name(&self) -> String {
        match self {
            BasisFamily::CurveMonomials { dim } => format!("curve_monomials(n={dim})"),
            BasisFamily::ParameterPolynomials => "parameter_polynomials".into(),
            BasisFamily::ParameterRational { poles, order_cap } => {
                let p: Vec<String> = poles.iter().map(|s| s.to_string()).collect();
                match order_cap {
                    Some(c) => format!("parameter_rational(poles=[{}], order<={c})", p.join(", ")),
                    None => format!("parameter_rational(poles=[{}])", p.join(", ")),
                }
            }
            BasisFamily::PulledBackMonomials { map, extra } => {
                format!("pulled_back_monomials(n={}, extra={})", map.dim(), extra.len())
            }
        }
    }

    /// The basis at truncation degree `d`, when it has a closed form.
    pub fn spec(&self, d: usize) -> Option<BasisSpec> {
        match self {
            BasisFamily::CurveMonomials { dim } => Some(BasisSpec::CurveMonomials { dim: *dim, degree: d }),
            BasisFamily::ParameterPolynomials => Some(BasisSpec::ParameterPolynomials { degree: d }),
            BasisFamily::ParameterRational { poles, order_cap } => Some(BasisSpec::ParameterRational {
                degree: d,
                pole_terms: poles
                    .iter()
                    .map(|&pole| PoleTerm {
                        pole,
                        max_order: order_cap.map_or(d, |c| d.min(c)),
                    })
                    .collect(),
            }),
            BasisFamily::PulledBackMonomials { .. } => None,
        }
    }

    /// Poles that evaluation points must avoid.
    pub fn poles(&self) -> Vec<Complex64> {
        match self {
            BasisFamily::ParameterRational { poles, .. } => poles.clone(),
            BasisFamily::PulledBackMonomials { map, .. } => map.poles().to_vec(),
            _ => Vec::new(),
        }
    }

    /// Ladder of all elements up to degree `d_max`; element 0 is the
    /// constant and elements of a level follow all lower levels.
    pub fn ladder(&self, d_max: usize) -> Vec<LadderStep> {
        match self {
            BasisFamily::CurveMonomials { dim } => monomial_ladder(*dim, d_max, Multiplier::Coordinate),
            BasisFamily::PulledBackMonomials { map, extra } => {
                let mut steps = monomial_ladder(map.dim(), d_max, Multiplier::MapCoordinate);
                let at: Vec<LadderStep> = extra
                    .iter()
                    .map(|p| LadderStep {
                        source: ElementSource::Explicit(p.clone()),
                        level: 0,
                        label: format!("extra(deg {})", p.degree()),
                    })
                    .collect();
                steps.splice(1..1, at);
                steps
            }
            BasisFamily::ParameterPolynomials => {
                let mut steps = vec![root()];
                for k in 1..=d_max {
                    steps.push(LadderStep {
                        source: ElementSource::Product(vec![(k - 1, Multiplier::Coordinate(0))]),
                        level: k,
                        label: BasisElement::Power(k).to_string(),
                    });
                }
                steps
            }
            BasisFamily::ParameterRational { poles, order_cap } => {
                let mut steps = vec![root()];
                let mut last_power = 0;
                let mut last_pole = vec![0usize; poles.len()];
                for k in 1..=d_max {
                    steps.push(LadderStep {
                        source: ElementSource::Product(vec![(last_power, Multiplier::Coordinate(0))]),
                        level: k,
                        label: BasisElement::Power(k).to_string(),
                    });
                    last_power = steps.len() - 1;
                    if order_cap.is_some_and(|c| k > c) {
                        continue;
                    }
                    for (p, &s) in poles.iter().enumerate() {
                        steps.push(LadderStep {
                            source: ElementSource::Product(vec![(last_pole[p], Multiplier::InversePole(s))]),
                            level: k,
                            label: BasisElement::Pole { pole: s, order: k }.to_string(),
                        });
                        last_pole[p] = steps.len() - 1;
                    }
                }
                steps
            }
        }
    }
}

fn root() -> LadderStep {
    LadderStep {
        source: ElementSource::Root,
        level: 0,
        label: "1".into(),
    }
}

fn monomial_ladder(dim: usize, d_max: usize, mult: fn(usize) -> Multiplier) -> Vec<LadderStep> {
    let exps = graded_exponents(dim, d_max);
    let index_of = |alpha: &[u32]| exps.iter().position(|e| e == alpha).expect("lower exponent present");
    exps.iter()
        .map(|alpha| {
            let level: u32 = alpha.iter().sum();
            if level == 0 {
                return root();
            }
            let candidates = (0..dim)
                .filter(|&i| alpha[i] > 0)
                .map(|i| {
                    let mut lower = alpha.clone();
                    lower[i] -= 1;
                    (index_of(&lower), mult(i))
                })
                .collect();
            LadderStep {
                source: ElementSource::Product(candidates),
                level: level as usize,
                label: BasisElement::Monomial(alpha.clone()).to_string(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn enumeration_examples() {
        let names = |s: BasisSpec| -> Vec<String> { s.elements().iter().map(|e| e.to_string()).collect() };
        assert_eq!(names(BasisSpec::CurveMonomials { dim: 2, degree: 1 }), ["1", "z1", "z2"]);
        assert_eq!(names(BasisSpec::ParameterPolynomials { degree: 2 }), ["1", "ζ", "ζ^2"]);
        let rational = BasisSpec::ParameterRational {
            degree: 1,
            pole_terms: vec![PoleTerm {
                pole: c(0.0, 0.0),
                max_order: 2,
            }],
        };
        assert_eq!(names(rational), ["1", "ζ", "ζ^-1", "ζ^-2"]);
        assert_eq!(
            names(BasisSpec::CurveMonomials { dim: 2, degree: 2 }),
            ["1", "z1", "z2", "z1^2", "z1*z2", "z2^2"]
        );
    }

    #[test]
    fn element_counts() {
        for dim in 1..4 {
            for degree in 0..6 {
                let s = BasisSpec::CurveMonomials { dim, degree };
                assert_eq!(s.len(), s.elements().len());
            }
        }
        let s = BasisSpec::ParameterRational {
            degree: 3,
            pole_terms: vec![
                PoleTerm { pole: c(0.0, 0.0), max_order: 2 },
                PoleTerm { pole: c(3.0, 0.0), max_order: 1 },
            ],
        };
        assert_eq!(s.len(), 7);
        assert_eq!(s.elements().len(), 7);
    }

    #[test]
    fn eval_vector_examples() {
        let v = BasisSpec::CurveMonomials { dim: 2, degree: 1 }
            .eval_vector(&[c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert_eq!(v, [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let v = BasisSpec::ParameterPolynomials { degree: 2 }.eval_vector(&[c(2.0, 0.0)]).unwrap();
        assert_eq!(v, [c(1.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let s = BasisSpec::ParameterRational {
            degree: 0,
            pole_terms: vec![PoleTerm { pole: c(0.0, 0.0), max_order: 1 }],
        };
        assert_eq!(s.eval_vector(&[c(2.0, 0.0)]).unwrap(), [c(1.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(s.eval_vector(&[c(0.0, 0.0)]), Err(Error::PoleProximity { .. })));
        assert!(s.eval_vector(&[c(1.0, 0.0), c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn ladders_match_closed_form_counts() {
        let fams = [
            BasisFamily::CurveMonomials { dim: 2 },
            BasisFamily::ParameterPolynomials,
            BasisFamily::ParameterRational {
                poles: vec![c(0.0, 0.0), c(2.0, 1.0)],
                order_cap: None,
            },
            BasisFamily::ParameterRational {
                poles: vec![c(0.0, 0.0)],
                order_cap: Some(2),
            },
        ];
        for fam in &fams {
            let ladder = fam.ladder(6);
            for d in 0..=6 {
                let count = ladder.iter().filter(|s| s.level <= d).count();
                assert_eq!(count, fam.spec(d).unwrap().len(), "{} at {d}", fam.name());
            }
            for (k, step) in ladder.iter().enumerate() {
                if let ElementSource::Product(c) = &step.source {
                    assert!(c.iter().all(|(p, _)| *p < k && ladder[*p].level < step.level));
                }
            }
        }
    }
}
