//! Simulation of a quantum-injected optical parametric amplifier.
//!
//! A single photon in a polarization qubit is injected into a type-II
//! parametric amplifier whose pair-creation terms form a polarization
//! singlet. The crate builds the amplified multi-photon state in a truncated
//! four-mode Fock space, its reduced density matrices, the first-order
//! correlation functions seen behind a diagonal analyzer on the anticloning
//! mode, the photon-pair statistics, and a Monte Carlo model of the heralded
//! coincidence measurement. Closed forms are paired with brute-force
//! routes (numerical propagation, partial traces, basis rotations) so they
//! can be checked against each other.

pub mod density;
pub mod detector;
pub mod error;
pub mod export;
pub mod fock;
pub mod observables;
pub mod opa;
pub mod polarization;
pub mod reference;
pub mod selftest;

pub use error::{QiopaError, Result};
pub use fock::{make_gain, FockIndex4, FockState4, GainParams, Mode, ModePair};
pub use opa::AmplifierConfig;
pub use polarization::{Axis, BlochPath, Qubit};
