//! Internal tangent spaces of orbit spaces `V/G` for compact groups acting
//! linearly on `ℝⁿ`.
//!
//! The pipeline reduces a point `x` to the isotropy representation of its
//! stabilizer on a linear slice and reports the fixed-point subspace of that
//! representation, whose dimension is the dimension of the internal tangent
//! space at `[x]`. An independent route spans the relations `v − g·v` and
//! counts what is left over; [`tangent::relation_certificate`] produces
//! explicit coefficient certificates for individual vectors.
//!
//! Module map:
//!
//! - [`numerics`]: tolerances, subspaces, projections.
//! - [`group`]: finite matrix groups, built-in compact groups, Haar sampling,
//!   stabilizers.
//! - [`averaging`]: the averaging projector and invariant inner products.
//! - [`geometry`]: orbit tangent spaces, slices, isotropy representations.
//! - [`tangent`]: the internal tangent space pipeline, the relation-span
//!   oracle and certificates.
//! - [`strata`]: subgroup lattices and orbit-type stratification.
//! - [`config`] and [`report`]: the JSON configuration and report formats used
//!   by the `orbitspace` binary.

pub mod averaging;
pub mod config;
pub mod error;
pub mod geometry;
pub mod group;
pub mod numerics;
pub mod report;
pub mod strata;
pub mod tangent;

pub use error::{Error, Result};
pub use numerics::{Subspace, Tolerance};
