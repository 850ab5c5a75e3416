// Frozen high-precision reference constants and NaN-rejecting range
// guards trip pedantic float lints.
#![allow(clippy::excessive_precision)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::manual_is_multiple_of)]

//! Twisted traces of harmonic modular functions and Eisenstein series on
//! hyperbolic 3-space.
//!
//! The library computes the twisted trace of the harmonic function `J_nu`
//! (a special value of a Niebur Poincare series for a Bianchi group) three
//! independent ways:
//!
//! * **closed**: as an exact integer built from Fourier coefficients of the
//!   modular j-invariant ([`qexp`], [`niebur::trace_niebur_closed`]),
//! * **series**: as a Kloosterman/Bessel series ([`sums`], [`special`],
//!   [`niebur::trace_niebur_series`]),
//! * **direct**: by evaluating the defining Poincare series at special
//!   points of binary hermitian forms and folding over orbit classes
//!   ([`orbits`]).
//!
//! Twisted traces of the weight-0 Eisenstein series are computed both as a
//! series and in closed form via Dirichlet L-values and divisor sums.

pub mod cache;
pub mod niebur;
pub mod orbits;
pub mod qexp;
pub mod ring;
pub mod special;
pub mod sums;

mod error;

pub use error::{Error, Result};
pub use ring::{Discriminant, DualLatticeElement, RingElement};
