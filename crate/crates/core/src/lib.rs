//! Numerical laboratory for diffusions with singular, critical and
//! supercritical drifts.
//!
//! The crate is organised by subsystem:
//!
//! * [`lorentz`] – weak-L^p and Lorentz quasinorms on sampled fields, the
//!   Krylov admissibility predicate and randomized inequality suites.
//! * [`kernels`] – heat kernel, Biot-Savart law, the supercritical
//!   divergence-free drift and mollified variants.
//! * [`sde`] – Euler-Maruyama path ensembles with stopping-time
//!   instrumentation, Krylov/Feynman-Kac functionals and density estimates.
//! * [`particles`] – weighted interacting particle systems (random vortex
//!   method for the Biot-Savart kernel).
//! * [`fpe`] – pseudospectral linear and nonlinear Fokker-Planck solvers,
//!   Duhamel-Picard iteration and decay/flow diagnostics.
//! * [`estimates`] – experiments turning the a-priori estimates into
//!   pass/fail checks.
//! * [`report`] – structured experiment reports.

pub mod density;
pub mod error;
pub mod estimates;
pub mod field;
pub mod fpe;
pub mod io;
pub mod kernels;
pub mod lorentz;
pub mod measure;
pub mod particles;
pub mod report;
pub mod rng;
pub mod sde;
pub mod spectral;
pub mod stats;

pub use error::{LabError, Result};
pub use field::{GridGeometry, SampledField, SpaceTimeField};
