//! Quantum-impurity thermometry toolkit.
//!
//! A spin-1/2 impurity coupled to a structured fermionic bath acts as a
//! thermometer: its thermal magnetization encodes the bath temperature.
//! This crate solves the underlying impurity models and converts the
//! resulting magnetization data into metrological figures of merit.
//!
//! The main pieces:
//!
//! * [`bath`] — bath densities of states, local Green's functions,
//!   logarithmic discretization and Wilson chains.
//! * [`ising_exact`] — exact solution of the Ising-coupled impurity
//!   (`J_perp = 0`) for an arbitrary bath, via boundary-potential
//!   Green's functions.
//! * [`meanfield`] — self-consistent mean-field treatment of the same
//!   model, used as an accuracy benchmark.
//! * [`nbl`] — closed-form two-site model for the narrow-band limit
//!   `J >> D`.
//! * [`nrg`] — full numerical renormalization group solver for the
//!   isotropic Kondo model, including shell thermodynamics and reduced
//!   density matrices.
//! * [`metrology`] — Fisher information, QFI/QSNR, Kondo-temperature
//!   estimators, negativity and scaling-collapse utilities.
//! * [`cli`] — declarative sweep configs, run cache and CSV/JSON
//!   emission backing the `thermo` binary.
//!
//! Energies are measured in units where `k_B = 1`; the bath halfwidth
//! `D` sets the overall scale.

pub mod bath;
pub mod cli;
pub mod curve;
pub mod ising_exact;
pub mod meanfield;
pub mod metrology;
pub mod nbl;
pub mod nrg;
pub mod numerics;
