//! Numerical core for Carleman weight/phase verification and weighted
//! resolvent estimates of radial semiclassical Schrödinger operators.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, the command line or a thread pool lives in the companion
//! `carleman-forge` crate; the algorithms here are parameterised over an
//! [`Executor`](exec::Executor) so callers can fan independent work items out
//! to whatever scheduler they own.
//!
//! Module map:
//!
//! * [`potential`]: hypothesis-class envelopes and concrete radial samples.
//! * [`scales`]: the `h`-dependent scale system and fixed construction constants.
//! * [`weight`]: the weight `w`, phase `φ` and their auxiliary functions.
//! * [`verifier`]: the pointwise lower bound for `A − (1+γ)B`, calibration,
//!   thresholds and lemma constants.
//! * [`resolvent`]: radial discretisation, weighted resolvent norms, energy
//!   identity and Carleman-type checks.
//! * [`fit`]: the shared log–log exponent fitter.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod exec;
pub mod fit;
pub(crate) mod math;
pub mod potential;
pub mod quadrature;
pub mod resolvent;
pub mod scales;
pub mod spectral;
pub mod verifier;
pub mod weight;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use potential::{PotentialParams, RadialPotential};
pub use scales::{ConstructionParams, HScales};
pub use weight::WeightPhase;
