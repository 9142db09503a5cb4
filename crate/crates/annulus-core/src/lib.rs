//! Numerical toolkit for area-preserving annulus dynamics built over
//! irrational circle rotations.
//!
//! The crate has two halves. One is a skew-product laboratory: a
//! continued-fraction kernel with certified quotients ([`rotation`]), a
//! trigonometric cocycle and its transfer function ([`phi`]), orbit/Birkhoff
//! engines ([`skew`]) and statistical probes of the resulting cylinder
//! dynamics ([`dynamics`]). The other is an approximation-by-conjugation
//! tower of explicit area-preserving maps ([`scheme`]) driven by rational
//! approximants of the same rotation number.
//!
//! Long sweeps (fiber classification, histogram sampling, grid suprema) are
//! data-parallel with `rayon` under the default `parallel` feature; disabling
//! it yields a dependency-free sequential build with identical results.

pub mod alpha;
pub mod dynamics;
pub mod error;
pub mod fixed;
pub mod par;
pub mod phi;
pub mod returns;
pub mod rotation;
pub mod scheme;
pub mod skew;

pub use alpha::AlphaSpec;
pub use error::{Error, Result};
pub use fixed::{circle_distance, CirclePos};
pub use rotation::{cf_expand, Convergent, RotationNumber};
