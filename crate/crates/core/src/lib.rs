//! Numerical laboratory for a clamped Kirchhoff–Love plate resting on a
//! Winkler foundation and loaded by a concentrated force.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: lattice geometry, node classification and node regions
//!   (interior offsets, discs, annuli, square coverings).
//! - [`material`]: elasticity and plate tensor fields with convexity and
//!   structural checks.
//! - [`fields`]: scalar fields, finite-difference derivatives and the
//!   `ρ₀`-normalized Sobolev, fractional and total-variation functionals.
//! - [`forward`]: assembly and solution of the clamped plate problem with
//!   energy and positivity diagnostics.
//! - [`inverse`]: pointwise reconstruction of the subgrade coefficient from
//!   interior deflection data.
//! - [`experiments`]: configuration, stability sweeps, exponent fits, audits
//!   and report emission behind the `winkler-lab` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod expr;
pub mod fields;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod material;

pub use error::{Error, Result};
pub use fields::{MultiIndex, ScalarField};
pub use grid::{DiscreteDomain, NodeClass, NodeRegion, Point, Rect};
