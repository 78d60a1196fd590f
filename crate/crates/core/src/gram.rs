//! Gram matrices of a basis in `L²(μ)` and the minimum-norm evaluation
//! constant on their numerical range.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::ortho::RANGE_LEAK_TOLERANCE;

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_RELATIVE_THRESHOLD: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct GramFactorization {
    spec: BasisSpec,
    /// Per-element scale `D`; the factorized matrix is `D G D`.
    scales: Vec<f64>,
    scaled: DMatrix<Complex64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
    cutoff: f64,
    rank: usize,
    asymmetry: f64,
}

/// Assemble `G_{αβ} = Σ_j w_j b_α(x_j) conj(b_β(x_j))` in the scaled basis
/// and factorize it.
pub fn gram(measure: &DiscreteMeasure, spec: &BasisSpec) -> Result<GramFactorization> {
    if measure.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if measure.dim() != spec.point_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.point_dim(),
            got: measure.dim(),
        });
    }
    let radii: Vec<f64> = (0..measure.dim()).map(|i| measure.coordinate_radius(i)).collect();
    let scales = spec.scale_factors(&radii, |s| {
        measure.nodes().map(|x| (x[0] - s).norm()).fold(f64::INFINITY, f64::min)
    });
    let elements = spec.elements();
    let k = elements.len();
    let n = measure.len();

    // column α holds √w_j D_α b_α(x_j)
    let mut a = DMatrix::<Complex64>::zeros(n, k);
    for (j, (x, &w)) in measure.nodes().zip(measure.weights()).enumerate() {
        let sw = w.sqrt();
        for (alpha, e) in elements.iter().enumerate() {
            a[(j, alpha)] = e.eval(x)? * (sw * scales[alpha]);
        }
    }
    let cols: Vec<Vec<Complex64>> = (0..k)
        .into_par_iter()
        .map(|beta| {
            (0..k)
                .map(|alpha| {
                    a.column(alpha)
                        .iter()
                        .zip(a.column(beta).iter())
                        .map(|(x, y)| x * y.conj())
                        .sum()
                })
                .collect()
        })
        .collect();
    let raw = DMatrix::from_fn(k, k, |alpha, beta| cols[beta][alpha]);
    let asymmetry = relative_asymmetry(&raw);
    let scaled = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);

    let eig = SymmetricEigen::new(scaled.clone());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = EIGEN_RELATIVE_THRESHOLD * lmax;
    let rank = eig.eigenvalues.iter().filter(|&&l| l > cutoff).count();
    Ok(GramFactorization {
        spec: spec.clone(),
        scales,
        scaled,
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
        cutoff,
        rank,
        asymmetry,
    })
}

fn relative_asymmetry(m: &DMatrix<Complex64>) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / scale
}

impl GramFactorization {
    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    /// The Gram matrix in the original, unscaled basis.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let d = &self.scales;
        DMatrix::from_fn(self.scaled.nrows(), self.scaled.ncols(), |i, j| {
            self.scaled[(i, j)] / (d[i] * d[j])
        })
    }

    /// The Gram matrix in the scaled basis actually factorized.
    pub fn scaled_gram(&self) -> &DMatrix<Complex64> {
        &self.scaled
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn numerical_rank(&self) -> usize {
        self.rank
    }

    /// Absolute eigenvalue cutoff, `1e-11 · λ_max` of the scaled matrix.
    pub fn threshold(&self) -> f64 {
        self.cutoff
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// `‖G − G*‖_F / ‖G‖_F` before symmetrization.
    pub fn hermitian_defect(&self) -> f64 {
        self.asymmetry
    }

    /// `sqrt(v* G⁺ v)` over the numerical range, or `+∞` when more than
    /// the leak tolerance of the scaled `v` lies outside it.
    pub fn bpe_constant(&self, v: &[Complex64]) -> Result<f64> {
        if v.len() != self.scales.len() {
            return Err(Error::DimensionMismatch {
                expected: self.scales.len(),
                got: v.len(),
            });
        }
        let vs = DVector::from_iterator(v.len(), v.iter().zip(&self.scales).map(|(x, d)| x * *d));
        let total = vs.norm();
        if total == 0.0 {
            return Ok(0.0);
        }
        let coeffs = self.eigenvectors.adjoint() * &vs;
        let mut c2 = 0.0;
        let mut leak2 = 0.0;
        for (c, &l) in coeffs.iter().zip(self.eigenvalues.iter()) {
            if l > self.cutoff {
                c2 += c.norm_sqr() / l;
            } else {
                leak2 += c.norm_sqr();
            }
        }
        if leak2.sqrt() > RANGE_LEAK_TOLERANCE * total {
            return Ok(f64::INFINITY);
        }
        Ok(c2.sqrt())
    }

    /// Evaluate the basis at `point` and return its constant.
    pub fn bpe_constant_at(&self, point: &[Complex64]) -> Result<f64> {
        self.bpe_constant(&self.spec.eval_vector(point)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisFamily, PoleTerm};
    use crate::curve::RationalMap;
    use crate::measure::{pushforward, uniform_circle_measure, Semantics};
    use crate::ortho::OrthonormalSystem;
    use std::f64::consts::{PI, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn circle_polynomial_gram_is_scaled_identity() {
        let m = uniform_circle_measure(1.0, 16, TAU).unwrap();
        let g = gram(&m, &BasisSpec::ParameterPolynomials { degree: 3 }).unwrap();
        let expected = DMatrix::<Complex64>::identity(4, 4) * c(TAU, 0.0);
        assert!((g.gram() - expected).norm() < 1e-12 * TAU);
        assert_eq!(g.numerical_rank(), 4);
        let c0 = g.bpe_constant_at(&[c(0.0, 0.0)]).unwrap();
        assert!((c0 - 1.0 / TAU.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn hyperbola_quadratic_rank_five() {
        let mu = pushforward(&uniform_circle_measure(1.0, 32, TAU).unwrap(), &RationalMap::hyperbola()).unwrap();
        let g = gram(&mu, &BasisSpec::CurveMonomials { dim: 2, degree: 2 }).unwrap();
        assert_eq!(g.numerical_rank(), 5);
        let g3 = gram(&mu, &BasisSpec::CurveMonomials { dim: 2, degree: 3 }).unwrap();
        let one = c(1.0, 0.0);
        let v = g3.bpe_constant_at(&[one, one]).unwrap();
        assert!((v * v - 7.0 / (2.0 * PI)).abs() < 1e-10);
        assert!(g3.bpe_constant_at(&[one, c(2.0, 0.0)]).unwrap().is_infinite());
    }

    #[test]
    fn constant_basis_is_total_mass() {
        let m = uniform_circle_measure(2.0, 7, 3.5).unwrap();
        let g = gram(&m, &BasisSpec::ParameterPolynomials { degree: 0 }).unwrap();
        assert!((g.gram()[(0, 0)].re - 3.5).abs() < 1e-14);
    }

    #[test]
    fn agrees_with_recurrence_on_well_conditioned_spans() {
        let nu = uniform_circle_measure(1.0, 64, TAU).unwrap();
        let spec = BasisSpec::ParameterRational {
            degree: 4,
            pole_terms: vec![PoleTerm {
                pole: c(0.0, 0.0),
                max_order: 4,
            }],
        };
        let g = gram(&nu, &spec).unwrap();
        let fam = BasisFamily::ParameterRational {
            poles: vec![c(0.0, 0.0)],
            order_cap: None,
        };
        let sys = OrthonormalSystem::build(&nu, &fam, 4).unwrap();
        for z in [c(0.7, 0.2), c(1.0, 0.0), c(-1.4, 0.5)] {
            let a = g.bpe_constant_at(&[z]).unwrap();
            let b = sys.constants(&[z]).unwrap()[4];
            assert!((a - b).abs() < 1e-9 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn psd_and_hermitian() {
        let m = DiscreteMeasure::new(
            1,
            vec![vec![c(0.5, 0.1)], vec![c(-0.2, 0.9)], vec![c(1.5, -0.3)]],
            vec![0.3, 1.0, 2.0],
            Semantics::Atomic,
            "",
        )
        .unwrap();
        let g = gram(&m, &BasisSpec::ParameterPolynomials { degree: 6 }).unwrap();
        assert!(g.hermitian_defect() < 1e-13);
        assert!(g.eigenvalues().iter().all(|&l| l >= -g.threshold()));
        assert_eq!(g.numerical_rank(), 3);
        assert!(g.bpe_constant(&[c(1.0, 0.0)]).is_err());
    }
}
