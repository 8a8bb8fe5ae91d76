//! Collective spin decay into a broadband squeezed vacuum.
//!
//! Dicke-basis spin algebra, closed-form moment equations, an explicit
//! master-equation reference and the ODE engine that drives both.

#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod lindblad;
pub mod moments;
pub mod ode;
pub mod params;
pub mod spin;

pub use error::{Error, Result};
pub use lindblad::{
    evolve, oscillator_oracle, steady_state, Liouvillian, OscillatorRun, Trajectory,
};
pub use moments::{OscillatorMoments, SpinMoments};
pub use ode::{integrate, IntegratorConfig, Method};
pub use params::{minimal_m, SqueezingParams};
pub use spin::{
    spin_coherent_state, BlochAngles, CMatrix, CVector, CollectiveOps, DickeSpace, QuantumState,
};
