//! Parameter regions `U = R⁻¹ B(0, ρ)` and rational bases with poles off
//! `U`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{bpe_sequence, BpeReport, GrowthPolicy};
use crate::basis::{BasisFamily, BasisSpec, PoleTerm};
use crate::curve::{RationalMap, POLE_TOLERANCE};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

/// Points whose image norm is within this fraction of `ρ` count as boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Cells per side of the sampling grid used to look for bounded
/// complement components.
const COMPLEMENT_GRID: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Outside,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPole {
    #[serde(with = "crate::wire::complex")]
    pub pole: Complex64,
    pub outside: bool,
}

/// A bounded component of the complement of `U` found by grid sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplementComponent {
    #[serde(with = "crate::wire::complex")]
    pub sample: Complex64,
    pub cells: usize,
    pub represented: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterRegion {
    pub rho: f64,
    pub margin: f64,
    #[serde(skip)]
    map: Option<RationalMap>,
    pub poles: Vec<RegionPole>,
    #[serde(with = "crate::wire::complex_vec")]
    pub representatives: Vec<Complex64>,
    /// Bounded complement components seen on the sampling grid; empty when
    /// `U` could not be enclosed in a box.
    pub complement_components: Vec<ComplementComponent>,
}

/// `ρ = max node norm / (1 − margin)`; representatives default to the poles.
pub fn parameter_region(map: &RationalMap, measure: &DiscreteMeasure, margin: f64) -> Result<ParameterRegion> {
    if measure.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if measure.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            got: measure.dim(),
        });
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::Invalid(format!("margin {margin} must lie in (0, 1)")));
    }
    let rho = measure.bounding_radius() / (1.0 - margin);
    let mut distinct: Vec<Complex64> = Vec::new();
    for &s in map.poles() {
        if !distinct.iter().any(|p| (p - s).norm() < 1e-8) {
            distinct.push(s);
        }
    }
    let mut region = ParameterRegion {
        rho,
        margin,
        map: Some(map.clone()),
        poles: Vec::new(),
        representatives: distinct.clone(),
        complement_components: Vec::new(),
    };
    region.poles = distinct
        .iter()
        .map(|&pole| RegionPole {
            pole,
            outside: region.membership(pole) != Membership::Inside,
        })
        .collect();
    region.complement_components = region.sample_complement();
    Ok(region)
}

impl ParameterRegion {
    fn map(&self) -> &RationalMap {
        self.map.as_ref().expect("regions are built with a map")
    }

    /// `|R(ζ)|` against `ρ`; poles are outside.
    pub fn membership(&self, zeta: Complex64) -> Membership {
        let Ok(point) = self.map().eval(zeta) else {
            return Membership::Outside;
        };
        let r = point.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (r - self.rho).abs() <= BOUNDARY_TOLERANCE * self.rho {
            Membership::Boundary
        } else if r < self.rho {
            Membership::Inside
        } else {
            Membership::Outside
        }
    }

    /// Replace the representatives; each must lie off `U`.
    pub fn with_representatives(mut self, reps: Vec<Complex64>) -> Result<Self> {
        if let Some(s) = reps.iter().find(|&&s| self.membership(s) == Membership::Inside) {
            return Err(Error::Precondition(format!("representative {s} lies inside the region")));
        }
        self.representatives = reps;
        self.complement_components = self.sample_complement();
        Ok(self)
    }

    /// Whether some sampled bounded complement component has no
    /// representative pole.
    pub fn under_resolved(&self) -> bool {
        self.complement_components.iter().any(|c| !c.represented)
    }

    /// Radius of a disk containing `U`, if one is found.
    fn enclosing_radius(&self) -> Option<f64> {
        let base = self
            .representatives
            .iter()
            .chain(self.map().poles())
            .map(|s| s.norm())
            .fold(1.0, f64::max);
        let mut r = base;
        for _ in 0..40 {
            let all_out = (0..64).all(|k| {
                let z = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / 64.0);
                self.membership(z) == Membership::Outside
            });
            if all_out {
                return Some(r);
            }
            r *= 2.0;
        }
        None
    }

    fn sample_complement(&self) -> Vec<ComplementComponent> {
        let Some(r) = self.enclosing_radius() else {
            return Vec::new();
        };
        let box_r = 1.5 * r;
        let n = COMPLEMENT_GRID;
        let h = 2.0 * box_r / n as f64;
        let centre = |k: usize| Complex64::new(-box_r + ((k % n) as f64 + 0.5) * h, -box_r + ((k / n) as f64 + 0.5) * h);
        let outside: Vec<bool> = (0..n * n).map(|k| self.membership(centre(k)) != Membership::Inside).collect();
        let mut label = vec![usize::MAX; n * n];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for start in 0..n * n {
            if !outside[start] || label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut stack = vec![start];
            let mut cells = Vec::new();
            label[start] = id;
            while let Some(k) = stack.pop() {
                cells.push(k);
                let (row, col) = (k / n, k % n);
                let mut nb = Vec::with_capacity(4);
                if row > 0 {
                    nb.push(k - n);
                }
                if row + 1 < n {
                    nb.push(k + n);
                }
                if col > 0 {
                    nb.push(k - 1);
                }
                if col + 1 < n {
                    nb.push(k + 1);
                }
                for j in nb {
                    if outside[j] && label[j] == usize::MAX {
                        label[j] = id;
                        stack.push(j);
                    }
                }
            }
            comps.push(cells);
        }
        let cell_of = |z: Complex64| -> Option<usize> {
            let col = ((z.re + box_r) / h).floor();
            let row = ((z.im + box_r) / h).floor();
            (col >= 0.0 && row >= 0.0 && (col as usize) < n && (row as usize) < n)
                .then(|| row as usize * n + col as usize)
        };
        comps
            .into_iter()
            .filter(|cells| {
                !cells.iter().any(|&k| {
                    let (row, col) = (k / n, k % n);
                    row == 0 || col == 0 || row + 1 == n || col + 1 == n
                })
            })
            .map(|cells| {
                let represented = self.representatives.iter().any(|&s| {
                    cell_of(s).is_some_and(|k| cells.contains(&k))
                });
                ComplementComponent {
                    sample: centre(cells[0]),
                    cells: cells.len(),
                    represented,
                }
            })
            .collect()
    }

    /// Family of polynomials plus pole terms at the representatives, with
    /// pole order `min(d, order_cap)` at degree `d`.
    pub fn family(&self, order_cap: Option<usize>) -> BasisFamily {
        BasisFamily::ParameterRational {
            poles: self.representatives.clone(),
            order_cap,
        }
    }
}

/// Polynomials of degree ≤ `d` plus `(ζ − s)^{-k}`, `k ≤ pole_order`, for
/// every representative `s`.
pub fn rational_basis(region: &ParameterRegion, d: usize, pole_order: usize) -> BasisSpec {
    let pole_terms = if pole_order == 0 {
        Vec::new()
    } else {
        region
            .representatives
            .iter()
            .map(|&pole| PoleTerm {
                pole,
                max_order: pole_order,
            })
            .collect()
    };
    BasisSpec::ParameterRational { degree: d, pole_terms }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RungeCheck {
    #[serde(with = "crate::wire::complex")]
    pub replaced: Complex64,
    #[serde(with = "crate::wire::complex")]
    pub alternate: Complex64,
    pub original: BpeReport,
    pub moved: BpeReport,
    pub agree: bool,
}

/// Compare classifications at `probe` when the representative nearest to
/// `alternate_pole` is moved there. The caller asserts that both poles lie
/// in the same complement component.
#[allow(clippy::too_many_arguments)]
pub fn runge_stability_check(
    nu: &DiscreteMeasure,
    region: &ParameterRegion,
    d_min: usize,
    d_max: usize,
    order_cap: Option<usize>,
    alternate_pole: Complex64,
    probe: Complex64,
    policy: &GrowthPolicy,
) -> Result<RungeCheck> {
    if region.representatives.is_empty() {
        return Err(Error::Precondition("the region has no poles to move".into()));
    }
    if region.membership(alternate_pole) == Membership::Inside {
        return Err(Error::Precondition(format!("alternate pole {alternate_pole} lies inside the region")));
    }
    if nu.nodes().any(|x| (x[0] - alternate_pole).norm() < POLE_TOLERANCE) {
        return Err(Error::PoleProximity {
            point: alternate_pole,
            pole: alternate_pole,
            tolerance: POLE_TOLERANCE,
        });
    }
    let (idx, _) = region
        .representatives
        .iter()
        .enumerate()
        .map(|(k, s)| (k, (s - alternate_pole).norm()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let original = bpe_sequence(nu, &region.family(order_cap), &[probe], d_min, d_max, policy)?;
    let mut poles = region.representatives.clone();
    let replaced = poles[idx];
    poles[idx] = alternate_pole;
    let moved_family = BasisFamily::ParameterRational { poles, order_cap };
    let moved = bpe_sequence(nu, &moved_family, &[probe], d_min, d_max, policy)?;
    Ok(RungeCheck {
        replaced,
        alternate: alternate_pole,
        agree: original.classification() == moved.classification(),
        original,
        moved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Classification;
    use crate::curve::RationalFunction;
    use crate::measure::{pushforward, uniform_circle_measure};
    use crate::poly::Poly;
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hyperbola_region() -> (DiscreteMeasure, ParameterRegion) {
        let nu = uniform_circle_measure(1.0, 128, TAU).unwrap();
        let mu = pushforward(&nu, &RationalMap::hyperbola()).unwrap();
        let region = parameter_region(&RationalMap::hyperbola(), &mu, 0.25).unwrap();
        (nu, region)
    }

    #[test]
    fn hyperbola_region_is_an_annulus() {
        let (_, region) = hyperbola_region();
        assert!((region.rho - 2f64.sqrt() / 0.75).abs() < 1e-12);
        assert_eq!(region.representatives, vec![c(0.0, 0.0)]);
        assert!(region.poles[0].outside);
        // r² + r⁻² = ρ²
        let rho2 = region.rho * region.rho;
        let inner = ((rho2 - (rho2 * rho2 - 4.0).sqrt()) / 2.0).sqrt();
        let outer = 1.0 / inner;
        assert_eq!(region.membership(c(1.0, 0.0)), Membership::Inside);
        assert_eq!(region.membership(c(inner * 0.99, 0.0)), Membership::Outside);
        assert_eq!(region.membership(c(0.0, outer * 1.01)), Membership::Outside);
        assert_eq!(region.membership(c(outer, 0.0)), Membership::Boundary);
        assert_eq!(region.complement_components.len(), 1);
        assert!(!region.under_resolved());
    }

    #[test]
    fn polynomial_and_single_pole_regions() {
        let cusp = RationalMap::monomial(&[2, 3]);
        let mu = pushforward(&uniform_circle_measure(1.0, 16, TAU).unwrap(), &cusp).unwrap();
        let r = parameter_region(&cusp, &mu, 0.1).unwrap();
        assert!(r.representatives.is_empty());
        assert!(r.complement_components.is_empty());
        assert_eq!(rational_basis(&r, 3, 2), BasisSpec::ParameterRational { degree: 3, pole_terms: vec![] });

        let one = c(1.0, 0.0);
        let map = RationalMap::new(vec![
            RationalFunction::new(Poly::constant(one), Poly::linear_factor(one)).unwrap(),
            RationalFunction::polynomial(Poly::monomial(1)),
        ])
        .unwrap();
        let nodes = uniform_circle_measure(0.1, 8, 1.0).unwrap();
        let mu = pushforward(&nodes, &map).unwrap();
        let r = parameter_region(&map, &mu, 0.2).unwrap();
        assert_eq!(r.representatives.len(), 1);
        assert!((r.representatives[0] - one).norm() < 1e-12);
        assert!(r.poles[0].outside);
    }

    #[test]
    fn rational_basis_examples() {
        let (_, region) = hyperbola_region();
        let names: Vec<String> = rational_basis(&region, 3, 3).elements().iter().map(|e| e.to_string()).collect();
        assert_eq!(names, ["1", "ζ", "ζ^2", "ζ^3", "ζ^-1", "ζ^-2", "ζ^-3"]);
        assert_eq!(rational_basis(&region, 3, 0).len(), 4);
        let two = region.clone().with_representatives(vec![c(0.0, 0.0), c(0.1, 0.0)]).unwrap();
        assert_eq!(rational_basis(&two, 5, 1).len(), 5 + 3);
        assert!(region.clone().with_representatives(vec![c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn runge_examples() {
        let (nu, region) = hyperbola_region();
        let p = GrowthPolicy::default();
        let on = runge_stability_check(&nu, &region, 0, 30, None, c(0.1, 0.0), c(1.0, 0.0), &p).unwrap();
        assert_eq!(on.original.classification(), Classification::Divergent);
        assert_eq!(on.moved.classification(), Classification::Divergent);
        let inside = runge_stability_check(&nu, &region, 0, 30, None, c(0.1, 0.0), c(1.3, 0.0), &p).unwrap();
        assert!(inside.agree);

        let cusp = RationalMap::monomial(&[2, 3]);
        let mu = pushforward(&nu, &cusp).unwrap();
        let poly_region = parameter_region(&cusp, &mu, 0.1).unwrap();
        assert!(matches!(
            runge_stability_check(&nu, &poly_region, 0, 10, None, c(5.0, 0.0), c(0.5, 0.0), &p),
            Err(Error::Precondition(_))
        ));
    }
}
