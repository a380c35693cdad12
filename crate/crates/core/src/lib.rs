//! Simulation toolkit for cavity-magnomechanical systems.
//!
//! The crate models small networks of bosonic modes (microwave cavities,
//! magnons, mechanical oscillators, optical cavities) coupled by
//! beam-splitter, dispersive (radiation-pressure-like), parametric,
//! cross-Kerr, and phase-dependent interactions, and provides:
//!
//! - nonlinear semiclassical steady states with Kerr multistability and
//!   hysteresis sweeps ([`meanfield`]),
//! - linearized drift/diffusion models, stability tests, steady-state and
//!   time-dependent Lyapunov solvers, polariton analysis ([`fluctuations`]),
//! - Gaussian quantum-information measures: squeezing, logarithmic
//!   negativity, residual contangle, steering ([`measures`]),
//! - frequency-domain linear response: probe reflection, group delay,
//!   dynamical backaction, output noise spectra ([`response`]),
//! - full nonlinear time-domain integration, frequency-comb detection and
//!   self-oscillation thresholds ([`nonlinear`]),
//! - magnetostrictive coupling rates from sampled displacement mode shapes
//!   ([`couplings`]),
//! - curated scenario presets bound to acceptance checks ([`scenarios`]).
//!
//! All rates are stored internally in rad/s; external configuration files
//! use ordinary frequencies in Hz. Decay rates follow the amplitude-decay
//! convention: a cavity amplitude decays as `exp(-kappa t)` and the full
//! linewidth is `2 kappa`; the mechanical `gamma_b` is the full mechanical
//! linewidth of the Brownian (position-coupled) damping model.

pub mod constants;
pub mod couplings;
mod cubic;
pub mod error;
pub mod fluctuations;
pub mod linalg;
pub mod meanfield;
pub mod measures;
pub mod model;
pub mod nonlinear;
mod ode;
pub mod par;
pub mod response;
pub mod scenarios;

pub use error::{Error, Result};
pub use model::{
    CouplingKind, CouplingSpec, DriveSpec, DriveTone, FrameSpec, ModeKind, ModeSpec, SystemSpec,
    ValidatedSystem,
};

/// Complex double-precision scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
