//! Iterated vertex chipping of simple convex polyhedra.
//!
//! A chipping step replaces every vertex of a simple convex polyhedron by a
//! small triangle, cutting each incident edge at a prescribed fraction. Under
//! regular rates the edge nets of the chipped polyhedra converge to a compact
//! limit set with a self-affine structure. This crate provides
//!
//! * [`polytope`]: seed shapes, validation, edge nets, Hausdorff distances
//!   and OBJ export,
//! * [`chipper`]: the chipping step, rate policies, genealogy and the
//!   sibling-sequence series for chart rates,
//! * [`charts`]: local and adapted charts, the per-step matrices and the
//!   affine maps composed along mother sequences,
//! * [`dimension`]: the singular value function, partition sums and their
//!   critical exponent, box counting and the spectral checks for the
//!   constant-rate system.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charts;
pub mod chipper;
pub mod dimension;
mod error;
pub mod polytope;

pub use error::{Error, Result};

/// 3×3 real matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;
/// Column vector in ℝ³.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Point in ℝ³.
pub type Point3 = nalgebra::Point3<f64>;

pub use charts::{AffineMap3, Chart, MatrixWord, MotherSeq, SigmaChoice, WordSpace};
pub use chipper::{chip, chip_sequence, ChipRates, ChipSequence, RatePolicy, SiblingSequence};
pub use dimension::{DimEstimate, EstimateMethod, SingularTriple};
pub use polytope::{make_seed, EdgeNet, Polyhedron, SeedShape, VertexId};
