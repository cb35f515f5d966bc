//! Numerical laboratory for Reeb flows on spherizations.
//!
//! The crate builds degree-two homogeneous Hamiltonians from fiberwise
//! starshaped hypersurfaces in cotangent bundles of model manifolds (the flat
//! 2-torus and compact quotients of Sol), integrates their flows, checks the
//! action-spectrum identities the sandwich construction relies on, and
//! estimates topological entropy three ways: Lyapunov exponents of the Sol
//! magnetic flow, volume growth of evolved fiber spheres, and counting of
//! fiber-to-fiber chords.
//!
//! Module map:
//!
//! - [`geometry`]: model manifolds, universal covers, deck groups, cometrics.
//! - [`starshape`]: radial profiles, the cutoff `f`, calibration and the
//!   sandwiched Hamiltonians `G₋ ≤ K ≤ G₊`.
//! - [`dynamics`]: Hamiltonian vector fields, the integrator, the action
//!   functional and chord shooting.
//! - [`sol_model`]: the left-invariant magnetic Hamiltonian on `Γ\Sol`.
//! - [`entropy`]: chord census, volume growth and exponential-rate fits.
//! - [`growth`]: word growth of `ℤ² ⋊_A ℤ`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod growth;
pub mod phase;
pub mod smooth;
pub mod sol_model;
pub mod starshape;

pub use error::{LabError, Result};
pub use phase::{CotangentPoint, PhaseVector};
