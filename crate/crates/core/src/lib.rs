//! Berry phases of a perturbed covariant harmonic oscillator on reduced
//! Minkowski space.
//!
//! The unperturbed states are the sixteen eigenfunctions with quantum
//! numbers `(n_a, l, n, m) ∈ {2, 3}⁴`. A fractional azimuthal perturbation
//! `ε₁V′ + ε₂V″` couples them, and [`berry`] computes the geometric phase
//! of each first-order state around a circle in `(ε₁, ε₂)`.

// `!(x > 0.0)` is the NaN-rejecting form used for parameter checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod berry;
pub mod error;
pub mod perturbation;
pub mod quad;
pub mod reference;
pub mod rms;
pub mod specfun;
pub mod validate;

pub use berry::{
    berry_connection, berry_phase_closed, berry_phase_loop_connection, berry_phase_loop_overlap,
    berry_phase_overlap_extrapolated, compare_oracles, ClosedFormVariant, LoopParams, Method, OracleComparison,
    PhaseResult, ZeroClass,
};
pub use error::{Error, Result};
pub use perturbation::{Channel, CorrectionCoefficients, Model, PerturbationParams};
pub use quad::{Axis, QuadratureRule};
pub use rms::{
    Basis, Eigenvalue, HbarConvention, OmegaConvention, PhysicalConstants, QuadConfig, QuantumNumbers, RmsPoint,
    StateIndex, Subspace,
};
pub use specfun::{LaguerreIndex, LegendreOrder};
