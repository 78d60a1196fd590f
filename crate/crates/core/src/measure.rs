//! Compactly supported positive measures as weighted node sets.
//!
//! Continuous measures only ever appear through a quadrature rule; the
//! [`Semantics`] flag records which reading applies so that analysis entry
//! points can refuse genuinely atomic measures.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::RationalMap;
use crate::error::{Error, Result};
use crate::multipoly::MultiPoly;
use crate::wire::{self, Pair};

/// Relative dropped mass above which command-line pullbacks fail.
pub const DROPPED_MASS_LIMIT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Semantics {
    /// Nodes and weights of a rule integrating the underlying continuous
    /// measure exactly up to the given order.
    QuadratureOfContinuous { exactness_order: usize },
    Atomic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
    semantics: Semantics,
    label: String,
    bounding_radius: f64,
}

impl DiscreteMeasure {
    /// Nodes are given row by row; each row must have `dim` entries.
    pub fn new(
        dim: usize,
        nodes: Vec<Vec<Complex64>>,
        weights: Vec<f64>,
        semantics: Semantics,
        label: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("measure dimension must be at least 1".into()));
        }
        if nodes.len() != weights.len() {
            return Err(Error::Invalid(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Invalid(format!("weights must be positive, got {w}")));
        }
        let mut flat = Vec::with_capacity(nodes.len() * dim);
        for row in &nodes {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Invalid("non-finite node".into()));
            }
            flat.extend_from_slice(row);
        }
        Ok(Self::from_flat(dim, flat, weights, semantics, label.into()))
    }

    fn from_flat(
        dim: usize,
        nodes: Vec<Complex64>,
        weights: Vec<f64>,
        semantics: Semantics,
        label: String,
    ) -> Self {
        let bounding_radius = nodes
            .chunks(dim)
            .map(|x| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        DiscreteMeasure {
            dim,
            nodes,
            weights,
            semantics,
            label,
            bounding_radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, j: usize) -> &[Complex64] {
        &self.nodes[j * self.dim..(j + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[Complex64]> + '_ {
        self.nodes.chunks(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Euclidean radius of the smallest origin-centred ball holding every node.
    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    /// Largest modulus of coordinate `i` over the nodes.
    pub fn coordinate_radius(&self, i: usize) -> f64 {
        self.nodes().map(|x| x[i].norm()).fold(0.0, f64::max)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Number of nodes after merging coincident ones.
    pub fn distinct_node_count(&self) -> usize {
        let mut seen: Vec<&[Complex64]> = Vec::new();
        for x in self.nodes() {
            let dup = seen.iter().any(|y| {
                x.iter()
                    .zip(y.iter())
                    .all(|(a, b)| (a - b).norm() <= 1e-12 * (1.0 + a.norm()))
            });
            if !dup {
                seen.push(x);
            }
        }
        seen.len()
    }

    /// Multiply every weight by `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Invalid("scale factor must be positive".into()));
        }
        Ok(Self::from_flat(
            self.dim,
            self.nodes.clone(),
            self.weights.iter().map(|w| w * t).collect(),
            self.semantics,
            format!("{} scaled by {t}", self.label),
        ))
    }

    /// Map each one-dimensional node through `f`, keeping the weights.
    pub fn map_nodes<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64,
    {
        assert_eq!(self.dim, 1);
        Self::from_flat(
            1,
            self.nodes.iter().map(|&z| f(z)).collect(),
            self.weights.clone(),
            self.semantics,
            self.label.clone(),
        )
    }

    /// Rotate a one-dimensional measure by `e^{iθ}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        self.map_nodes(|z| z * r)
    }

    /// Exactness order when this is a quadrature measure.
    pub fn exactness_order(&self) -> Option<usize> {
        match self.semantics {
            Semantics::QuadratureOfContinuous { exactness_order } => Some(exactness_order),
            Semantics::Atomic => None,
        }
    }

    /// `Σ_j w_j f(x_j)`.
    pub fn integrate<F>(&self, f: F) -> Complex64
    where
        F: Fn(&[Complex64]) -> Complex64,
    {
        self.nodes()
            .zip(&self.weights)
            .map(|(x, &w)| f(x) * w)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = Vec::new();
        for i in 0..self.dim {
            header.push(format!("re_z{}", i + 1));
            header.push(format!("im_z{}", i + 1));
        }
        header.push("weight".into());
        writeln!(out, "{}", header.join(","))?;
        for (x, w) in self.nodes().zip(&self.weights) {
            let mut row: Vec<String> = x
                .iter()
                .flat_map(|z| [format!("{:.17e}", z.re), format!("{:.17e}", z.im)])
                .collect();
            row.push(format!("{w:.17e}"));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `n` equally spaced nodes on the circle of the given radius, equal weights.
/// The rule is exact for every trigonometric monomial `e^{ikt}` with `|k| < n`.
pub fn uniform_circle_measure(radius: f64, n: usize, total_mass: f64) -> Result<DiscreteMeasure> {
    if !(radius > 0.0) || n == 0 || !(total_mass > 0.0) {
        return Err(Error::Invalid(
            "circle measure needs radius > 0, n ≥ 1 and total_mass > 0".into(),
        ));
    }
    let nodes = (0..n)
        .map(|j| Complex64::from_polar(radius, TAU * j as f64 / n as f64))
        .collect();
    Ok(DiscreteMeasure::from_flat(
        1,
        nodes,
        vec![total_mass / n as f64; n],
        Semantics::QuadratureOfContinuous { exactness_order: n },
        format!("circle(r={radius}, n={n})"),
    ))
}

/// Trapezoidal discretization of `density(t) · |d/dt P(r e^{it})| dt` on
/// the image of the circle of radius `r`, i.e. arc length against a smooth
/// weight along a closed parametrized curve.
pub fn arc_length_measure<F>(map: &RationalMap, radius: f64, n: usize, density: F) -> Result<DiscreteMeasure>
where
    F: Fn(f64) -> f64,
{
    if !(radius > 0.0) || n == 0 {
        return Err(Error::Invalid("arc length measure needs radius > 0 and n ≥ 1".into()));
    }
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let t = TAU * j as f64 / n as f64;
        let zeta = Complex64::from_polar(radius, t);
        let dzeta = Complex64::new(0.0, 1.0) * zeta;
        let point = map.eval(zeta)?;
        let speed = map
            .coords()
            .iter()
            .map(|c| (c.eval_derivative(zeta) * dzeta).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let w = density(t) * speed * TAU / n as f64;
        if w > 0.0 {
            nodes.push(point);
            weights.push(w);
        }
    }
    DiscreteMeasure::new(
        map.dim(),
        nodes,
        weights,
        Semantics::QuadratureOfContinuous { exactness_order: n },
        format!("arc length on image of circle(r={radius}, n={n})"),
    )
}

/// Transport a parameter-plane measure onto the curve: nodes go through the
/// map, weights are kept.
pub fn pushforward(measure: &DiscreteMeasure, map: &RationalMap) -> Result<DiscreteMeasure> {
    if measure.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: measure.dim(),
        });
    }
    let mut nodes = Vec::with_capacity(measure.len() * map.dim());
    for x in measure.nodes() {
        nodes.extend(map.eval(x[0])?);
    }
    Ok(DiscreteMeasure::from_flat(
        map.dim(),
        nodes,
        measure.weights.clone(),
        measure.semantics,
        format!("pushforward of [{}]", measure.label),
    ))
}

/// Result of pulling a curve measure back to the parameter plane.
#[derive(Clone, Debug)]
pub struct Pullback {
    pub measure: DiscreteMeasure,
    /// Total weight of nodes whose fiber was empty or had several points.
    pub dropped_mass: f64,
    pub dropped_nodes: Vec<usize>,
}

impl Pullback {
    pub fn relative_dropped_mass(&self) -> f64 {
        let kept = self.measure.total_mass();
        let total = kept + self.dropped_mass;
        if total > 0.0 {
            self.dropped_mass / total
        } else {
            0.0
        }
    }
}

/// Pull a curve measure back along the map. Nodes with a unique preimage are
/// transported; the rest (the exceptional set and points off the image) are
/// dropped and their weight reported.
pub fn pullback_measure(measure: &DiscreteMeasure, map: &RationalMap, tol: f64) -> Result<Pullback> {
    if measure.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            got: measure.dim(),
        });
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut dropped_mass = 0.0;
    let mut dropped_nodes = Vec::new();
    for (j, (x, &w)) in measure.nodes().zip(&measure.weights).enumerate() {
        let fib = map.fiber(x, tol)?;
        if fib.solutions.len() == 1 {
            nodes.push(fib.solutions[0]);
            weights.push(w);
        } else {
            dropped_mass += w;
            dropped_nodes.push(j);
        }
    }
    Ok(Pullback {
        measure: DiscreteMeasure::from_flat(
            1,
            nodes,
            weights,
            measure.semantics,
            format!("pullback of [{}]", measure.label),
        ),
        dropped_mass,
        dropped_nodes,
    })
}

/// `(‖p‖_{2,μ}, ‖p∘P‖_{2,ν})`. The composition is formed symbolically and
/// evaluated at the parameter-side nodes, so the two norms are computed
/// along independent paths.
pub fn isometry_check(
    poly: &MultiPoly,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    map: &RationalMap,
) -> Result<(f64, f64)> {
    if mu.dim() != poly.dim() {
        return Err(Error::DimensionMismatch {
            expected: poly.dim(),
            got: mu.dim(),
        });
    }
    if nu.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: nu.dim(),
        });
    }
    let composed = poly.compose(map)?;
    let norm_mu = mu.integrate(|x| poly.eval(x).norm_sqr().into()).re.sqrt();
    let norm_nu = nu
        .integrate(|z| composed.eval_unchecked(z[0]).norm_sqr().into())
        .re
        .sqrt();
    Ok((norm_mu, norm_nu))
}

/// `L(z1, z2) = z1 + a z2` applied to every node of a measure on ℂ².
pub fn project_measure(measure: &DiscreteMeasure, a: Complex64) -> Result<DiscreteMeasure> {
    if measure.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: measure.dim(),
        });
    }
    let nodes = measure.nodes().map(|x| x[0] + a * x[1]).collect();
    Ok(DiscreteMeasure::from_flat(
        1,
        nodes,
        measure.weights.clone(),
        measure.semantics,
        format!("projection z1 + ({a}) z2 of [{}]", measure.label),
    ))
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SemanticsWire {
    Quadrature(usize),
    Atomic,
}

#[derive(Serialize, Deserialize)]
struct MeasureWire {
    dim: usize,
    nodes: Vec<Vec<Pair>>,
    weights: Vec<f64>,
    semantics: SemanticsWire,
    label: String,
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureWire {
            dim: self.dim,
            nodes: self
                .nodes()
                .map(|x| x.iter().copied().map(wire::to_pair).collect())
                .collect(),
            weights: self.weights.clone(),
            semantics: match self.semantics {
                Semantics::QuadratureOfContinuous { exactness_order } => {
                    SemanticsWire::Quadrature(exactness_order)
                }
                Semantics::Atomic => SemanticsWire::Atomic,
            },
            label: self.label.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = MeasureWire::deserialize(d)?;
        let semantics = match w.semantics {
            SemanticsWire::Quadrature(n) => Semantics::QuadratureOfContinuous { exactness_order: n },
            SemanticsWire::Atomic => Semantics::Atomic,
        };
        let nodes = w
            .nodes
            .into_iter()
            .map(|row| row.into_iter().map(wire::from_pair).collect())
            .collect();
        DiscreteMeasure::new(w.dim, nodes, w.weights, semantics, w.label).map_err(D::Error::custom)
    }
}
