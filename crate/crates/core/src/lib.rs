//! Bounded point evaluations for mean polynomial and rational approximation
//! on measures carried by rational curves.
//!
//! The crate works at finite truncation scale: a measure is a weighted node
//! set, spans are truncated by degree, and every asymptotic statement is
//! replaced by a classified sequence of Christoffel-type constants
//! `C_d(λ) = sup{|p(λ)| : ‖p‖₂ ≤ 1, p in the degree-d span}`.

pub mod analysis;
pub mod basis;
pub mod curve;
pub mod error;
pub mod gram;
pub mod measure;
pub mod multipoly;
pub mod operators;
pub mod ortho;
pub mod poly;
pub mod presets;
pub mod rational;
pub mod wire;

pub use basis::{BasisElement, BasisFamily, BasisSpec, PoleTerm};
pub use curve::{CodimensionReport, FiberReport, PropernessReport, RationalFunction, RationalMap};
pub use error::{Error, Result};
pub use measure::{DiscreteMeasure, Semantics};
pub use multipoly::MultiPoly;
pub use poly::Poly;
pub use analysis::{
    bpe_sequence, classify_growth, compare_base_change, density_verdict, scan_region, BpeReport, Classification,
    DensityVerdict, GridSpec, GrowthPolicy, ProbeMapping, RegionScan, ScanOptions,
};
pub use gram::{gram, GramFactorization};
pub use operators::{block_decomposition, invariant_subspace_witness, BlockDecomposition, Witness};
pub use ortho::OrthonormalSystem;
pub use presets::Preset;
pub use rational::{parameter_region, rational_basis, runge_stability_check, ParameterRegion};
