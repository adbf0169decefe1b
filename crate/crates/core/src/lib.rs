//! Spectral-Galerkin simulation of semilinear damped wave-type equations with a
//! time-delayed feedback term, together with the energy and decay certificates
//! that accompany it.
//!
//! The model is
//!
//! ```text
//! u'' + A u + CC* u' + k(t) BB* u'(t - tau) = grad psi(u),
//! ```
//!
//! truncated to the first `n` eigenmodes of `A` on `(0, pi)`. Everything here
//! is pure computation on `alloc` containers; file formats and the command line
//! live in the `delaywave` crate.
//!
//! ## Modules
//!
//! - [`spectral`]: the truncated operators `A`, `CC*`, `BB*` and the phase-space norm.
//! - [`delay`]: piecewise-linear delay coefficients `k(t)` and their window integrals.
//! - [`nonlinearity`]: the power source `u|u|^beta` and its bounding functions.
//! - [`steps`]: a method-of-steps RK4 engine for systems with one constant delay.
//! - [`integrator`]: scenarios, trajectories and the blow-up guard.
//! - [`energy`]: the delayed energy functional and its Gronwall checks.
//! - [`certificate`]: the smallness program and decay envelopes.
//! - [`semigroup`]: measured `(M, omega)` for the undelayed linear generator.
#![no_std]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod certificate;
pub mod delay;
pub mod energy;
mod error;
pub mod history;
pub mod integrator;
pub mod linalg;
pub mod nonlinearity;
pub mod quadrature;
pub mod semigroup;
pub mod spectral;
pub mod steps;

pub use certificate::{smallness_program, CertificateInputs, Check, DecayEnvelope, StabilityCertificate};
pub use delay::{AdmissibilityFit, DelayCoefficient};
pub use energy::{cbar, energy, EnergyGrowthReport, LowerBoundReport};
pub use error::{Error, Result};
pub use history::{HistoryBuffer, HistoryDescriptor};
pub use integrator::{simulate, Outcome, Scenario, TrajectoryRecord};
pub use nonlinearity::{Nonlinearity, PowerNonlinearity};
pub use semigroup::{assemble_generator, estimate_decay, DecayEstimate, GeneratorMatrix};
pub use spectral::{gram_matrix, plate_preset, wave_preset, SpectralSystem, State};
