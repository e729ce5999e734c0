//! Weak recovery thresholds for `l1` minimization on random under-determined
//! systems.
//!
//! Two independent routes lead to the same threshold curve:
//!
//! * the geometric route in [`exponents`], which evaluates the combinatorial,
//!   internal-angle and external-angle growth exponents by root finding and
//!   one-dimensional minimization, and
//! * the closed-form route in [`thresholds`], which solves a scalar equation in
//!   `erfinv` for the weak threshold `beta_w(alpha)`.
//!
//! [`thresholds::verify_equivalence`] checks that the net exponent of the first
//! route vanishes exactly at the threshold produced by the second.
//! [`sparse_lab`] validates the thresholds empirically with basis pursuit
//! solved by the dense simplex in [`lp`].

pub mod cli;
pub mod error;
pub mod exponents;
pub mod lp;
pub mod sparse_lab;
pub mod special_fn;
pub mod thresholds;

pub use error::{Error, Result};
pub use exponents::{ExponentBreakdown, Ratios, Variant};
pub use thresholds::{EquivalenceReport, ThresholdPoint};
