//! Sparse multivariate polynomials over ℂⁿ, with exact composition against
//! a rational map.

use num_complex::Complex64;
use rand::Rng;

use crate::curve::{RationalFunction, RationalMap};
use crate::error::{Error, Result};
use crate::poly::Poly;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    dim: usize,
    terms: Vec<(Vec<u32>, Complex64)>,
}

impl MultiPoly {
    pub fn new(dim: usize, terms: Vec<(Vec<u32>, Complex64)>) -> Result<Self> {
        if let Some((e, _)) = terms.iter().find(|(e, _)| e.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: e.len(),
            });
        }
        Ok(MultiPoly { dim, terms })
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        MultiPoly {
            dim,
            terms: vec![(vec![0; dim], c)],
        }
    }

    /// Dense polynomial of total degree ≤ `degree` with coefficients drawn
    /// uniformly from the unit square.
    pub fn random<R: Rng>(dim: usize, degree: u32, rng: &mut R) -> Self {
        let mut terms = Vec::new();
        for alpha in crate::basis::graded_exponents(dim, degree as usize) {
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            terms.push((alpha, c));
        }
        MultiPoly { dim, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Vec<u32>, Complex64)] {
        &self.terms
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(alpha, c)| {
                alpha
                    .iter()
                    .zip(x)
                    .fold(*c, |acc, (&k, &xi)| acc * xi.powu(k))
            })
            .sum()
    }

    /// `p ∘ map` as a single rational function over the common denominator
    /// `∏ den_i^{m_i}`, with `m_i` the largest exponent of `z_i`.
    pub fn compose(&self, map: &RationalMap) -> Result<RationalFunction> {
        if map.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: map.dim(),
            });
        }
        let max_exp: Vec<u32> = (0..self.dim)
            .map(|i| self.terms.iter().map(|(a, _)| a[i]).max().unwrap_or(0))
            .collect();
        let coords = map.coords();
        let mut num = Poly::zero();
        for (alpha, c) in &self.terms {
            let mut t = Poly::constant(*c);
            for i in 0..self.dim {
                t = &t * &coords[i].num.pow(alpha[i]);
                t = &t * &coords[i].den.pow(max_exp[i] - alpha[i]);
            }
            num = &num + &t;
        }
        let mut den = Poly::one();
        for i in 0..self.dim {
            den = &den * &coords[i].den.pow(max_exp[i]);
        }
        Ok(RationalFunction { num, den })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn composition_agrees_with_pointwise_evaluation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = MultiPoly::random(2, 3, &mut rng);
        for map in [RationalMap::hyperbola(), RationalMap::monomial(&[2, 3])] {
            let f = p.compose(&map).unwrap();
            let z = Complex64::new(0.7, -0.4);
            let direct = p.eval(&map.eval(z).unwrap());
            assert!((f.eval_unchecked(z) - direct).norm() < 1e-12 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn curve_equation_composes_to_zero() {
        // z1 z2 - 1 on the hyperbola
        let one = Complex64::new(1.0, 0.0);
        let p = MultiPoly::new(2, vec![(vec![1, 1], one), (vec![0, 0], -one)]).unwrap();
        let f = p.compose(&RationalMap::hyperbola()).unwrap();
        assert!(f.num.trimmed(1e-15).is_zero());
    }
}
