//! Multiplication operators on the node space, split along a truncated
//! polynomial span and its orthogonal complement.
//!
//! With `Q = [Q₁ Q₂]` unitary and `Q₁` spanning the degree-`d` span, the
//! diagonal multiplication `N_i` by coordinate `i` becomes
//!
//! ```text
//! Q* N_i Q = [ M  S ]
//!            [ X  T ]
//! ```
//!
//! `X` vanishes only when the span is invariant on the nodes, so it is
//! reported rather than dropped. Normality of `N_i` gives
//! `[M*, M] = S S* − X* X` and `S* S − [T, T*] = X X*` exactly.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::BasisFamily;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::ortho::OrthonormalSystem;

#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub coordinate: usize,
    pub degree: usize,
    pub m: DMatrix<Complex64>,
    pub s: DMatrix<Complex64>,
    pub x: DMatrix<Complex64>,
    pub t: DMatrix<Complex64>,
    pub summary: BlockSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub coordinate: usize,
    pub degree: usize,
    pub rank: usize,
    pub node_count: usize,
    pub norm_m: f64,
    pub norm_s: f64,
    /// Spectral norm of the (2,1) block.
    pub norm_x: f64,
    pub norm_t: f64,
    /// `‖Q (Q* N Q) Q* − N‖_F / ‖N‖_F`.
    pub reassembly_error: f64,
    /// `‖[M*, M] − S S* + X* X‖_F`.
    pub normality_residual_top: f64,
    /// `‖S* S − [T, T*] − X X*‖_F`.
    pub normality_residual_bottom: f64,
    /// `‖[M*, M] − S S*‖_F`; equals `‖X* X‖_F` up to rounding.
    pub triangular_residual_top: f64,
    /// `‖S* S − [T, T*]‖_F`; equals `‖X X*‖_F` up to rounding.
    pub triangular_residual_bottom: f64,
    /// `|trace [M*, M]|`.
    pub trace_commutator: f64,
}

fn spectral_norm(a: &DMatrix<Complex64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    SVD::new(a.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

fn fro(a: &DMatrix<Complex64>) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        a.norm()
    }
}

/// Unitary completion of orthonormal columns: eigenvectors of `I − Q₁Q₁*`
/// with eigenvalue near 1.
fn complete(q1: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = q1.nrows();
    let r = q1.ncols();
    if r >= n {
        return DMatrix::zeros(n, 0);
    }
    let proj = DMatrix::<Complex64>::identity(n, n) - q1 * q1.adjoint();
    let proj = (&proj + proj.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(proj);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let cols: Vec<usize> = idx.into_iter().take(n - r).collect();
    DMatrix::from_fn(n, cols.len(), |i, k| eig.eigenvectors[(i, cols[k])])
}

/// Blocks of multiplication by coordinate `i` relative to the degree-`d`
/// span of `family` on the nodes.
pub fn block_decomposition(
    measure: &DiscreteMeasure,
    family: &BasisFamily,
    d: usize,
    i: usize,
) -> Result<BlockDecomposition> {
    let system = OrthonormalSystem::build(measure, family, d)?;
    block_decomposition_from(&system, measure, d, i)
}

pub fn block_decomposition_from(
    system: &OrthonormalSystem,
    measure: &DiscreteMeasure,
    d: usize,
    i: usize,
) -> Result<BlockDecomposition> {
    if i >= measure.dim() {
        return Err(Error::Invalid(format!(
            "coordinate {i} out of range for dimension {}",
            measure.dim()
        )));
    }
    let q1 = system.node_basis(d);
    let r = q1.ncols();
    if r == 0 {
        return Err(Error::RankZero);
    }
    let n = q1.nrows();
    let q2 = complete(&q1);
    let mut q = DMatrix::<Complex64>::zeros(n, n);
    q.columns_mut(0, r).copy_from(&q1);
    q.columns_mut(r, n - r).copy_from(&q2);

    let diag: Vec<Complex64> = measure.nodes().map(|x| x[i]).collect();
    let nq = DMatrix::from_fn(n, n, |row, col| diag[row] * q[(row, col)]);
    let a = q.adjoint() * nq;
    let full = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
    let reassembled = &q * &a * q.adjoint();
    let n_norm = fro(&full).max(f64::MIN_POSITIVE);
    let reassembly_error = fro(&(reassembled - &full)) / n_norm;

    let m = a.view((0, 0), (r, r)).into_owned();
    let s = a.view((0, r), (r, n - r)).into_owned();
    let x = a.view((r, 0), (n - r, r)).into_owned();
    let t = a.view((r, r), (n - r, n - r)).into_owned();

    let comm_m = m.adjoint() * &m - &m * m.adjoint();
    let ss = &s * s.adjoint();
    let xx_top = x.adjoint() * &x;
    let s_s = s.adjoint() * &s;
    let comm_t = &t * t.adjoint() - t.adjoint() * &t;
    let xx_bottom = &x * x.adjoint();

    let summary = BlockSummary {
        coordinate: i,
        degree: d,
        rank: r,
        node_count: n,
        norm_m: spectral_norm(&m),
        norm_s: spectral_norm(&s),
        norm_x: spectral_norm(&x),
        norm_t: spectral_norm(&t),
        reassembly_error,
        normality_residual_top: fro(&(&comm_m - &ss + &xx_top)),
        normality_residual_bottom: fro(&(&s_s - &comm_t - &xx_bottom)),
        triangular_residual_top: fro(&(&comm_m - &ss)),
        triangular_residual_bottom: fro(&(&s_s - &comm_t)),
        trace_commutator: comm_m.trace().norm(),
    };
    Ok(BlockDecomposition {
        coordinate: i,
        degree: d,
        m,
        s,
        x,
        t,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "crate::wire::complex_vec")]
    pub beta: Vec<Complex64>,
    pub degree: usize,
    pub rank: usize,
    /// Smallest singular value of the stacked `(M_i − β_i)*`.
    pub residual: f64,
    /// Coefficients of the witness in the orthonormal basis of the span.
    #[serde(with = "crate::wire::complex_vec")]
    pub vector: Vec<Complex64>,
    /// `|⟨w, k_β⟩| / ‖k_β‖` with `k_β = (conj q_k(β))_k`; absent when
    /// evaluation at `β` is unbounded on the span.
    pub kernel_correlation: Option<f64>,
}

/// Approximate joint eigenvector of the adjoint compressions at `β`.
pub fn invariant_subspace_witness(
    measure: &DiscreteMeasure,
    family: &BasisFamily,
    d: usize,
    beta: &[Complex64],
) -> Result<Witness> {
    let system = OrthonormalSystem::build(measure, family, d)?;
    witness_from(&system, measure, d, beta)
}

/// Witnesses for several degrees from one system built to the largest.
pub fn witness_sequence(
    measure: &DiscreteMeasure,
    family: &BasisFamily,
    degrees: &[usize],
    beta: &[Complex64],
) -> Result<Vec<Witness>> {
    let d_max = degrees.iter().copied().max().ok_or(Error::Invalid("no degrees".into()))?;
    let system = OrthonormalSystem::build(measure, family, d_max)?;
    degrees.iter().map(|&d| witness_from(&system, measure, d, beta)).collect()
}

pub fn witness_from(
    system: &OrthonormalSystem,
    measure: &DiscreteMeasure,
    d: usize,
    beta: &[Complex64],
) -> Result<Witness> {
    let dim = measure.dim();
    if beta.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: beta.len(),
        });
    }
    let q1 = system.node_basis(d);
    let r = q1.ncols();
    if r == 0 {
        return Err(Error::RankZero);
    }
    let n = q1.nrows();
    let mut stacked = DMatrix::<Complex64>::zeros(dim * r, r);
    for (i, &b) in beta.iter().enumerate() {
        let diag: Vec<Complex64> = measure.nodes().map(|x| x[i]).collect();
        let nq = DMatrix::from_fn(n, r, |row, col| diag[row] * q1[(row, col)]);
        let mut m = q1.adjoint() * nq;
        for k in 0..r {
            m[(k, k)] -= b;
        }
        stacked.view_mut((i * r, 0), (r, r)).copy_from(&m.adjoint());
    }
    let svd = SVD::new(stacked, false, true);
    let (k_min, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let v_t = svd.v_t.expect("requested");
    let vector: Vec<Complex64> = v_t.row(k_min).iter().map(|z| z.conj()).collect();

    let kernel_correlation = system.evaluate(beta).ok().and_then(|ev| {
        if ev.constants[d].is_infinite() {
            return None;
        }
        let k: Vec<Complex64> = ev.q_values[..r].iter().map(|q| q.conj()).collect();
        let kn = k.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let dot: Complex64 = vector.iter().zip(&k).map(|(w, kk)| w.conj() * kk).sum();
        Some(dot.norm() / kn)
    });
    Ok(Witness {
        beta: beta.to_vec(),
        degree: d,
        rank: r,
        residual: sigma,
        vector,
        kernel_correlation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::RationalMap;
    use crate::measure::{pushforward, uniform_circle_measure};
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn saturating_hyperbola_span_has_no_cross_block() {
        let mu = pushforward(&uniform_circle_measure(1.0, 33, TAU).unwrap(), &RationalMap::hyperbola()).unwrap();
        for i in 0..2 {
            let b = block_decomposition(&mu, &BasisFamily::CurveMonomials { dim: 2 }, 16, i).unwrap();
            assert_eq!(b.summary.rank, 33);
            assert!(b.summary.norm_s <= 1e-8);
            let m = &b.m;
            assert!((m.adjoint() * m - m * m.adjoint()).norm() < 1e-9);
            assert!(b.summary.reassembly_error < 1e-10);
        }
    }

    #[test]
    fn circle_shift_defect() {
        let nu = uniform_circle_measure(1.0, 64, TAU).unwrap();
        let b = block_decomposition(&nu, &BasisFamily::ParameterPolynomials, 10, 0).unwrap();
        let s = &b.summary;
        assert!((s.norm_s - 1.0).abs() < 1e-10);
        assert!(s.reassembly_error < 1e-10);
        assert!(s.normality_residual_top < 1e-9 && s.normality_residual_bottom < 1e-9);
        assert!(s.trace_commutator < 1e-12);
        // ζ^11 leaves the span and ζ^64 = 1 wraps around on the nodes
        assert!((s.norm_x - 1.0).abs() < 1e-10);
    }

    #[test]
    fn circle_witness_at_origin_and_half() {
        let nu = uniform_circle_measure(1.0, 128, TAU).unwrap();
        let w = invariant_subspace_witness(&nu, &BasisFamily::ParameterPolynomials, 20, &[c(0.0, 0.0)]).unwrap();
        assert!(w.residual <= 1e-8);
        assert!(w.vector[0].norm() > 1.0 - 1e-10);
        let ws = witness_sequence(&nu, &BasisFamily::ParameterPolynomials, &[10, 15, 20], &[c(0.5, 0.0)]).unwrap();
        assert!(ws[0].residual > ws[1].residual && ws[1].residual > ws[2].residual);
        assert!(ws.iter().all(|w| w.kernel_correlation.unwrap() >= 0.999));
    }
}
