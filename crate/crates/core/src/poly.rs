//! Dense univariate polynomials with complex coefficients.
//!
//! Coefficients are stored lowest degree first. Roots come from the
//! eigenvalues of the companion matrix, followed by a short Newton polish
//! against the original coefficients.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    /// `z^k`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![ZERO; k + 1];
        c[k] = ONE;
        Poly { coeffs: c }
    }

    /// `z - a`.
    pub fn linear_factor(a: Complex64) -> Self {
        Poly {
            coeffs: vec![-a, ONE],
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Drop trailing coefficients whose modulus is below `rel * max|c|`.
    pub fn trimmed(&self, rel: f64) -> Poly {
        let cutoff = rel * self.max_abs_coeff();
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|x| x.norm() <= cutoff) {
            c.pop();
        }
        Poly { coeffs: c }
    }

    /// All complex roots, with multiplicity.
    pub fn roots(&self) -> Vec<Complex64> {
        let p = self.trimmed(1e-14);
        if p.coeffs.len() <= 1 {
            return Vec::new();
        }
        // exact zero roots first
        let lead_zeros = p.coeffs.iter().take_while(|c| **c == ZERO).count();
        let reduced = Poly::new(p.coeffs[lead_zeros..].to_vec());
        let mut roots = vec![ZERO; lead_zeros];
        let n = reduced.degree();
        match n {
            0 => {}
            1 => roots.push(-reduced.coeffs[0] / reduced.coeffs[1]),
            _ => {
                let lead = reduced.coeffs[n];
                let mut companion = DMatrix::<Complex64>::zeros(n, n);
                for i in 1..n {
                    companion[(i, i - 1)] = ONE;
                }
                for i in 0..n {
                    companion[(i, n - 1)] = -reduced.coeffs[i] / lead;
                }
                let eig = Schur::new(companion)
                    .eigenvalues()
                    .expect("complex Schur form is triangular");
                let deriv = reduced.derivative();
                roots.extend(eig.iter().map(|&z| polish(&reduced, &deriv, z)));
            }
        }
        roots
    }
}

fn polish(p: &Poly, dp: &Poly, mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let f = p.eval(z);
        let df = dp.eval(z);
        if df.norm() == 0.0 {
            break;
        }
        let cand = z - f / df;
        if p.eval(cand).norm() < f.norm() {
            z = cand;
        } else {
            break;
        }
    }
    z
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(ZERO)
                        + rhs.coeffs.get(k).copied().unwrap_or(ZERO)
                })
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(-ONE)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn horner_matches_direct_sum() {
        let p = Poly::new(vec![c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 1.0)]);
        let z = c(0.3, -1.2);
        let direct = c(1.0, 0.0) + c(0.0, 2.0) * z + c(-3.0, 1.0) * z * z;
        assert!((p.eval(z) - direct).norm() < 1e-14);
    }

    #[test]
    fn roots_of_unity() {
        // z^5 - 1
        let mut coeffs = vec![ZERO; 6];
        coeffs[0] = -ONE;
        coeffs[5] = ONE;
        let roots = Poly::new(coeffs).roots();
        assert_eq!(roots.len(), 5);
        for r in &roots {
            assert!((r.powu(5) - ONE).norm() < 1e-13);
        }
    }

    #[test]
    fn roots_with_zero_and_complex_factor() {
        // z^2 (z - i)(z + 2)
        let p = &(&Poly::monomial(2) * &Poly::linear_factor(c(0.0, 1.0))) * &Poly::linear_factor(c(-2.0, 0.0));
        let r = sorted(p.roots());
        let expected = sorted(vec![ZERO, ZERO, c(0.0, 1.0), c(-2.0, 0.0)]);
        for (a, b) in r.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(Poly::constant(c(3.0, 0.0)).roots().is_empty());
        assert!(Poly::zero().roots().is_empty());
    }

    #[test]
    fn arithmetic() {
        let a = Poly::from_real(&[1.0, 1.0]);
        let sq = a.pow(2);
        assert_eq!(sq, Poly::from_real(&[1.0, 2.0, 1.0]));
        assert_eq!(&sq - &sq, Poly::zero());
        assert_eq!(sq.derivative(), Poly::from_real(&[2.0, 2.0]));
    }
}
