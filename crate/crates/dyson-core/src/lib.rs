//! Construction and verification of time-dependent Dyson maps and metric
//! operators for a pair of coupled non-Hermitian harmonic oscillators and for
//! the unstable quartic anharmonic oscillator.
//!
//! The library is organized around three layers:
//!
//! * an operator layer: the four-generator algebra of the coupled-oscillator
//!   model ([`algebra`]) together with truncated Fock-space matrix
//!   representations, and time-dependent scalar coefficients ([`coeffs`]);
//! * a solution layer: order-by-order perturbative chains ([`perturb`]), the
//!   catalogue of exact Dyson maps with their auxiliary functions
//!   ([`catalogue`]), and the strong-coupling quartic pipeline ([`quartic`]);
//! * a verification layer: matrix-level residual checks of the time-dependent
//!   Dyson equation and quasi-Hermiticity relation ([`verification`]) and the
//!   instantaneous-energy observables ([`observables`]).
//!
//! All checks are deterministic: fixed-step integrators, no randomness at
//! runtime.

pub mod algebra;
pub mod catalogue;
pub mod coeffs;
pub mod dd;
pub mod linalg;
pub mod observables;
pub mod perturb;
pub mod quartic;
pub mod verification;

pub use coeffs::{CoeffFn, TimeGrid};
