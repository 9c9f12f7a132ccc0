//! Multi-agent ergodic coverage on a rectangle, driven by spectral feedback.
//!
//! A team of first-order agents is steered so that the time average of its
//! trajectory matches a target spatial density. Both the target and the
//! empirical coverage are expressed through coefficients of a cosine basis
//! with zero-flux (Neumann) boundary behaviour; each agent descends the
//! spectrally weighted mismatch between the two coefficient sets.
//!
//! The crate provides the basis and quadrature machinery ([`spectral`]),
//! normalized Gaussian-mixture targets ([`density`]), per-run coverage
//! statistics ([`coverage`]), the feedback laws ([`control`]), a seeded
//! Euler-Maruyama simulator ([`sim`]), and post-run diagnostics such as
//! invariant-manifold escape times and mean-square boundedness checks
//! ([`analysis`]).
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std`
//! feature switches float math to the platform intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod control;
pub mod coverage;
pub mod density;
mod error;
mod math;
pub mod sim;
pub mod spectral;
mod vec2;

pub use error::{Error, Result};
pub use vec2::Vec2;
