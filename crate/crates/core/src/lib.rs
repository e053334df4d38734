//! Certified homotopy continuation for square systems of homogeneous polynomials.
//!
//! The path tracker chooses each step from the condition number and two
//! step-size gauges, then certifies every iterate with alpha theory, so the
//! returned subdivision carries a proof that each iterate approximates the
//! lifted solution path.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
mod float_serde;
pub mod homotopy;
pub mod invariants;
pub mod linalg;
pub mod newton_alpha;
pub mod oracle;
pub mod polysys;
pub mod projgeom;
pub mod sampling;
pub mod suites;
pub mod tracker;

pub use error::{Error, Result};
pub use polysys::{HomogeneousSystem, Monomial, ProjectivePoint};
