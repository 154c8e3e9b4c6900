//! Convex envelopes on the Heisenberg group.
//!
//! Group arithmetic, scalar fields on ℍ, sub-Riemannian finite differences,
//! pointwise convexification over horizontal planes, the iterated envelope,
//! and residual checks for second-order PDEs. `no_std` with `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod heisenberg;
pub mod fields;
pub mod differential;
pub mod lp;
pub mod convexify;
pub mod envelope;
pub mod pde;
pub mod corpus;

pub use error::{Error, Result};
pub use heisenberg::{Point, PlaneCoord, Side};
pub use fields::{Coercivity, FillMode, GridBox, GridField, ScalarField};
