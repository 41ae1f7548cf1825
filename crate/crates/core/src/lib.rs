//! Desk-scale machinery for sup-norm experiments on compact arithmetic
//! surfaces: exact arithmetic in a rational quaternion algebra and a maximal
//! order, hyperbolic upper half-plane geometry, enumeration of order elements
//! in hyperbolic balls, Hecke coset decompositions, truncated Bergman kernel
//! evaluation with empirical tail bounds, and the amplifier bound calculus
//! that reproduces the weight exponent 5/6 (squared scale).

// `!(x >= 0.0)` guards reject NaN along with the out-of-range values; the
// suggested `x < 0.0` would silently accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index-based loops over small fixed matrices mirror the formulas
#![allow(clippy::needless_range_loop)]
// divisibility tests read as written in the arithmetic they implement
#![allow(clippy::manual_is_multiple_of)]

pub mod amplifier;
pub mod bergman;
pub mod config;
pub mod cosets;
pub mod error;
pub mod extended;
pub mod geometry;
pub mod hilbert;
pub mod lattice;
pub mod logscale;
pub mod order;
pub mod primes;
pub mod quadrature;
pub mod quaternion;

pub use error::{Error, Result};
pub use geometry::UhpPoint;
pub use logscale::LogScaledReal;
pub use order::Order;
pub use quaternion::{AlgebraParams, QuaternionElement, Rational};
