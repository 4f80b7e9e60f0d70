//! Collective single-photon emission from regular arrays of multilevel atoms.
//!
//! A single excitation stored in a metastable state is released by a control
//! laser into an optically excited J = 1 manifold that decays collectively.
//! The crate assembles the non-Hermitian generator of the zero-photon
//! amplitudes, propagates it, evaluates the far-field photon intensity per
//! helicity and designs control envelopes that shape the emitted waveform.

pub mod drive;
pub mod dynamics;
pub mod error;
pub mod farfield;
pub mod greens;
pub mod hamiltonian;
pub mod integrator;
pub mod model;
pub mod oracles;
pub mod pchip;
pub mod quadrature;
pub mod shaping;

pub use error::{Error, Result};
