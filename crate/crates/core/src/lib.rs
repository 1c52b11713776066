//! Simulator and analysis toolkit for the spectroscopy of four Kerr
//! non-linear resonators coupled by a single four-body interaction.
//!
//! The crate covers the full pipeline:
//!
//! * [`operators`] — dense complex operators on tensor-product spaces;
//! * [`hamiltonian`] — the driven system Hamiltonian, in the bosonic picture
//!   and in the two-level (qubit) reduction, in a rotating frame;
//! * [`analytic`] — closed-form eigensystems of the two invariant subspaces
//!   that carry the spectroscopic signal, plus the transition table;
//! * [`lindblad`] — a Lindblad master-equation integrator (fixed-step RK4 and
//!   adaptive RK45) with single-qubit amplitude damping;
//! * [`spectroscopy`] — probe-detuning sweeps, peak detection and assignment
//!   of peaks to analytic transition energies;
//! * [`config`] / [`output`] / [`cli`] — TOML run configs, CSV/SVG/manifest
//!   artifacts and the command-line front end.
//!
//! Angular frequencies are used internally everywhere (rad/us); config files
//! and reports use ordinary frequencies in MHz. Times are microseconds.

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod hamiltonian;
pub mod lindblad;
pub mod operators;
pub mod output;
pub mod spectroscopy;

pub use error::{Error, Result};
pub use hamiltonian::SystemParams;

/// Converts an ordinary frequency in MHz to an angular one in rad/us.
pub fn mhz_to_rad(f: f64) -> f64 {
    f * std::f64::consts::TAU
}

/// Converts an angular frequency in rad/us to an ordinary one in MHz.
pub fn rad_to_mhz(w: f64) -> f64 {
    w / std::f64::consts::TAU
}
