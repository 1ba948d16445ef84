//! Numerical laboratory for the nonlinear Schrödinger equation with a
//! time-decaying harmonic potential,
//!
//! ```text
//! i ∂ₜu = −½Δu + σ(t)|x|²/2 · u + F(u),
//! ```
//!
//! where F is homogeneous of the critical degree 1 + 2/(d(1−λ)).
//!
//! Modules, bottom-up:
//! - [`potential`]: σ(t), the fundamental pair (ζ₁, ζ₂) and its asymptotics.
//! - [`nonlinearity`]: periodic symbols g(θ), Fourier coefficients gₙ, the
//!   resonant split and the summability check.
//! - [`params`]: admissibility windows for (λ, δ, b, ε₁, q, r).
//! - [`fieldops`]: grids, the unitary transform, chirps, dilations, free
//!   propagation, a closed-form Gaussian oracle and the factorization
//!   identities.
//! - [`profile`]: the log-corrected profile and the remainder operator R(t).
//! - [`dynamics`]: Strang split-step evolution and the final-state runs.
//! - [`harness`]: weighted norms, power-law fits, configuration and reports.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fieldops;
pub mod harness;
pub mod nonlinearity;
pub mod params;
pub mod potential;
pub mod profile;

pub use error::{Error, Result};
