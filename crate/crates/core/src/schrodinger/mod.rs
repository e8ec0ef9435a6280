//! Exact propagation of the time-dependent Schrödinger equation, a grid
//! eigensolver and rectangular-barrier scattering.

mod barrier;
mod eigen;
mod potential;
mod propagate;

pub use barrier::{barrier_transmission_exact, ScatteringState, Transmission};
pub use eigen::{stationary_states, StationaryStates, REFINEMENT_TOLERANCE};
pub use potential::PotentialSpec;
pub use propagate::{energy, position_expectation, propagate, Method, PropagatorConfig, Snapshots};

