//! Spectral laboratory for linear and Galerkin-truncated nonlinear Schrödinger
//! flows on the one- and two-dimensional torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`] holds the lattice Fourier representation, transforms,
//!   frequency projections and norms (Lebesgue, Sobolev, discrete `X^{s,b}`).
//! * [`propagators`] evolves fields: the exact free flow, Galilean modulation,
//!   Wick-ordered nonlinearities and the truncated flow `Φ^N_t`.
//! * [`random`] generates seeded Gaussian Fourier series and unit-scale
//!   randomizations of a fixed profile.
//! * [`experiments`] contains the measurements (maximal functions, scaling
//!   fits, smoothing estimators) built on top of the above.
//! * [`resonance`] counts lattice resonance sets exactly.

pub mod error;
pub mod experiments;
pub mod propagators;
pub mod random;
pub mod resonance;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
