//! Grid-sampled variational analysis: admissible functions, tilt
//! perturbations, discrete conjugates, subdifferential graphs, and
//! certificate checkers for stable well-posedness, tilt stability and
//! metric regularity with respect to admissible functions.
//!
//! Everything operates on uniform grids in one or two dimensions. Each
//! checker returns a [`Certificate`] carrying the constants it tested, the
//! worst margin found, and the sample that produced it.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissible;
pub mod catalog;
pub mod certificate;
pub mod conjugate;
pub mod error;
pub mod gridfn;
pub mod regularity;
pub mod subdiff;
pub mod wellposed;

pub use admissible::{AdmissibleFunction, ADMISSIBLE_FAMILIES};
pub use catalog::FunctionSpec;
pub use certificate::{Certificate, Verdict};
pub use error::{Error, Result};
pub use gridfn::{GridFunction, Point, PointSet};
pub use subdiff::SetValuedGraph;
