//! Orthonormal systems for nested bases, built by Arnoldi-style
//! recurrence on the measure nodes.
//!
//! Each ladder element is its parent's orthonormal function times a simple
//! multiplier, orthogonalized in two Gram–Schmidt passes against the
//! functions already accepted. Elements whose residual vanishes on the
//! nodes are kept as *kernel residuals*: they carry zero seminorm, so any
//! point where they do not vanish admits no bounded evaluation.
//!
//! The same recurrence coefficients evaluate every orthonormal function at
//! off-node points, which gives `C_d(λ)² = Σ_{k ≤ d} |q_k(λ)|²` without ever
//! forming an ill-conditioned Gram matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{BasisFamily, ElementSource, Multiplier};
use crate::curve::POLE_TOLERANCE;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

/// Relative residual below which a new element counts as dependent on the
/// nodes. The square root of the Gram eigenvalue threshold `1e-11`.
pub const KERNEL_RELATIVE_RESIDUAL: f64 = 3.162_277_660_168_379_5e-6;

/// A kernel residual leaking more than this fraction of its cancellation
/// scale at a point makes the evaluation there unbounded.
pub const RANGE_LEAK_TOLERANCE: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
enum Resolved {
    Root,
    Product { parent: usize, mult: Multiplier },
    Explicit(crate::poly::Poly),
}

#[derive(Clone, Debug)]
struct Element {
    level: usize,
    label: String,
    source: Resolved,
    /// Projection coefficients against `q_0 … q_{m-1}`.
    h: Vec<Complex64>,
    /// Residual norm for independent elements.
    norm: f64,
    /// Node norm of the element before projection.
    raw_norm: f64,
    q_index: Option<usize>,
    /// Kernel element generated from a kernel parent without projection.
    chain: bool,
}

#[derive(Clone, Debug)]
pub struct OrthonormalSystem {
    family: BasisFamily,
    d_max: usize,
    dim: usize,
    weights: Vec<f64>,
    elements: Vec<Element>,
    /// `q_k(x_j)` for every accepted function, node-major inside each vector.
    q_nodes: Vec<Vec<Complex64>>,
    q_levels: Vec<usize>,
}

/// Values of the system at one point.
#[derive(Clone, Debug)]
pub struct PointEvaluation {
    /// `q_k(λ)` for every accepted function, in acceptance order.
    pub q_values: Vec<Complex64>,
    /// Largest relative kernel leak over elements of each level.
    pub level_leak: Vec<f64>,
    /// `C_d(λ)` for `d = 0..=d_max`; infinite past the first leaking level.
    pub constants: Vec<f64>,
}

impl OrthonormalSystem {
    pub fn build(measure: &DiscreteMeasure, family: &BasisFamily, d_max: usize) -> Result<Self> {
        if measure.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if measure.dim() != family.point_dim() {
            return Err(Error::DimensionMismatch {
                expected: family.point_dim(),
                got: measure.dim(),
            });
        }
        let n = measure.len();
        let dim = measure.dim();
        let weights = measure.weights().to_vec();
        let nodes: Vec<Vec<Complex64>> = measure.nodes().map(|x| x.to_vec()).collect();
        for x in &nodes {
            for s in family.poles() {
                if (x[0] - s).norm() < POLE_TOLERANCE {
                    return Err(Error::PoleProximity {
                        point: x[0],
                        pole: s,
                        tolerance: POLE_TOLERANCE,
                    });
                }
            }
        }

        let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter()
                .zip(b)
                .zip(&weights)
                .map(|((x, y), &w)| x * y.conj() * w)
                .sum()
        };
        let norm = |a: &[Complex64]| inner(a, a).re.max(0.0).sqrt();

        let ladder = family.ladder(d_max);
        let mut elements: Vec<Element> = Vec::with_capacity(ladder.len());
        let mut q_nodes: Vec<Vec<Complex64>> = Vec::new();
        let mut q_levels: Vec<usize> = Vec::new();

        for step in ladder {
            let (source, raw) = match &step.source {
                ElementSource::Root => {
                    let mass = measure.total_mass();
                    let q0 = vec![Complex64::new(1.0 / mass.sqrt(), 0.0); n];
                    q_nodes.push(q0);
                    q_levels.push(step.level);
                    elements.push(Element {
                        level: step.level,
                        label: step.label.clone(),
                        source: Resolved::Root,
                        h: Vec::new(),
                        norm: mass.sqrt(),
                        raw_norm: mass.sqrt(),
                        q_index: Some(0),
                        chain: false,
                    });
                    continue;
                }
                ElementSource::Product(cands) => {
                    let pick = cands
                        .iter()
                        .find(|(p, _)| elements[*p].q_index.is_some())
                        .or(cands.first())
                        .expect("product elements have a parent");
                    let (parent, mult) = *pick;
                    let Some(qi) = elements[parent].q_index else {
                        elements.push(Element {
                            level: step.level,
                            label: step.label.clone(),
                            source: Resolved::Product { parent, mult },
                            h: Vec::new(),
                            norm: 0.0,
                            raw_norm: 0.0,
                            q_index: None,
                            chain: true,
                        });
                        continue;
                    };
                    let raw: Vec<Complex64> = nodes
                        .iter()
                        .zip(&q_nodes[qi])
                        .map(|(x, &q)| multiplier_value(family, mult, x) * q)
                        .collect();
                    (Resolved::Product { parent, mult }, raw)
                }
                ElementSource::Explicit(p) => {
                    let raw = nodes.iter().map(|x| p.eval(x[0])).collect();
                    (Resolved::Explicit(p.clone()), raw)
                }
            };

            let raw_norm = norm(&raw);
            let mut v = raw;
            let mut h = vec![ZERO; q_nodes.len()];
            for _ in 0..2 {
                for (j, q) in q_nodes.iter().enumerate() {
                    let c = inner(&v, q);
                    h[j] += c;
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let r = norm(&v);
            let independent = r > KERNEL_RELATIVE_RESIDUAL * raw_norm && r > 0.0;
            let q_index = if independent {
                for vi in v.iter_mut() {
                    *vi /= r;
                }
                q_nodes.push(v);
                q_levels.push(step.level);
                Some(q_nodes.len() - 1)
            } else {
                None
            };
            elements.push(Element {
                level: step.level,
                label: step.label,
                source,
                h,
                norm: r,
                raw_norm,
                q_index,
                chain: false,
            });
        }

        Ok(OrthonormalSystem {
            family: family.clone(),
            d_max,
            dim,
            weights,
            elements,
            q_nodes,
            q_levels,
        })
    }

    pub fn family(&self) -> &BasisFamily {
        &self.family
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// Number of ladder elements up to degree `d`.
    pub fn element_count(&self, d: usize) -> usize {
        self.elements.iter().filter(|e| e.level <= d).count()
    }

    /// Numerical rank of the degree-`d` span on the nodes.
    pub fn rank(&self, d: usize) -> usize {
        self.elements
            .iter()
            .filter(|e| e.level <= d && e.q_index.is_some())
            .count()
    }

    /// Labels of the accepted orthonormal functions, in acceptance order.
    pub fn accepted_labels(&self) -> Vec<&str> {
        self.elements
            .iter()
            .filter(|e| e.q_index.is_some())
            .map(|e| e.label.as_str())
            .collect()
    }

    /// Columns `√w_j q_k(x_j)` for the accepted functions of degree ≤ `d`:
    /// an orthonormal basis of the span inside the unitary node space.
    pub fn node_basis(&self, d: usize) -> DMatrix<Complex64> {
        let cols: Vec<usize> = self
            .elements
            .iter()
            .filter(|e| e.level <= d)
            .filter_map(|e| e.q_index)
            .collect();
        let n = self.node_count();
        DMatrix::from_fn(n, cols.len(), |j, k| self.q_nodes[cols[k]][j] * self.weights[j].sqrt())
    }

    /// Evaluate every orthonormal function at `point`.
    pub fn evaluate(&self, point: &[Complex64]) -> Result<PointEvaluation> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        for s in self.family.poles() {
            if (point[0] - s).norm() < POLE_TOLERANCE {
                return Err(Error::PoleProximity {
                    point: point[0],
                    pole: s,
                    tolerance: POLE_TOLERANCE,
                });
            }
        }
        let mut q_values: Vec<Complex64> = Vec::with_capacity(self.q_nodes.len());
        // value and cancellation scale of each element at the point
        let mut value = vec![ZERO; self.elements.len()];
        let mut scale = vec![0.0f64; self.elements.len()];
        let mut level_leak = vec![0.0f64; self.d_max + 1];

        for (k, e) in self.elements.iter().enumerate() {
            let raw = match &e.source {
                Resolved::Root => {
                    let q0 = Complex64::new(1.0 / e.norm, 0.0);
                    q_values.push(q0);
                    value[k] = q0;
                    continue;
                }
                Resolved::Product { parent, mult } => multiplier_value(&self.family, *mult, point) * value[*parent],
                Resolved::Explicit(p) => p.eval(point[0]),
            };
            if e.chain {
                let Resolved::Product { parent, mult } = e.source else {
                    unreachable!("chains are products")
                };
                value[k] = raw;
                scale[k] = multiplier_value(&self.family, mult, point).norm() * scale[parent];
            } else {
                let mut s = raw;
                let mut cancel = raw.norm();
                for (j, h) in e.h.iter().enumerate() {
                    let t = h * q_values[j];
                    s -= t;
                    cancel += t.norm();
                }
                match e.q_index {
                    Some(_) => {
                        let q = s / e.norm;
                        q_values.push(q);
                        value[k] = q;
                        continue;
                    }
                    None => {
                        // |r(λ)| ≤ ‖b‖·C(λ) whenever evaluation is bounded
                        let c2: f64 = q_values.iter().map(|q| q.norm_sqr()).sum();
                        value[k] = s;
                        scale[k] = cancel.max(e.raw_norm * c2.sqrt());
                    }
                }
            }
            let leak = if scale[k] > 0.0 {
                value[k].norm() / scale[k]
            } else if value[k].norm() > 0.0 || value[k].is_nan() {
                f64::INFINITY
            } else {
                0.0
            };
            let lv = &mut level_leak[e.level];
            *lv = lv.max(if leak.is_nan() { f64::INFINITY } else { leak });
        }

        let mut constants = Vec::with_capacity(self.d_max + 1);
        let mut acc = 0.0;
        let mut unbounded = false;
        let mut qi = 0;
        for d in 0..=self.d_max {
            while qi < q_values.len() && self.q_levels[qi] <= d {
                acc += q_values[qi].norm_sqr();
                qi += 1;
            }
            unbounded |= level_leak[d] > RANGE_LEAK_TOLERANCE;
            constants.push(if unbounded || !acc.is_finite() { f64::INFINITY } else { acc.sqrt() });
        }
        Ok(PointEvaluation {
            q_values,
            level_leak,
            constants,
        })
    }

    /// Levels of the accepted functions, in acceptance order.
    pub fn accepted_levels(&self) -> &[usize] {
        &self.q_levels
    }

    /// `C_d(λ)` for `d = 0..=d_max`.
    pub fn constants(&self, point: &[Complex64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(point)?.constants)
    }
}

fn multiplier_value(family: &BasisFamily, mult: Multiplier, x: &[Complex64]) -> Complex64 {
    match mult {
        Multiplier::Coordinate(i) => x[i],
        Multiplier::MapCoordinate(i) => match family {
            BasisFamily::PulledBackMonomials { map, .. } => map.coords()[i].eval_unchecked(x[0]),
            _ => unreachable!("map multipliers only occur in pulled-back families"),
        },
        Multiplier::InversePole(s) => (x[0] - s).inv(),
    }
}
