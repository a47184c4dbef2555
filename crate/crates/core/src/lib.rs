//! Numerical laboratory for a dissipative Hopfield dielectric: a polarization
//! field coupled to light and to a transverse environment field through a
//! time-dependent coupling G(t). Provides the static linear response, the
//! first-order particle-creation analytics, an exact per-mode Bogoliubov
//! solver, a lattice oracle for the environment elimination and first-order
//! correlation maps.

pub mod correlations;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod linear_response;
pub mod model;
pub mod ode;
pub mod perturbative;
pub mod quadrature;

pub use error::{Error, Result};
pub use model::{DeltaNPulse, MediumParams, SampledProfile, SpectralAmplitude, SwitchingProfile};
