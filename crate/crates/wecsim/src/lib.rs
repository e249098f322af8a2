//! Design and operation toolkit for a no-insulation HTS tubular wave energy
//! converter: magnet geometry, axisymmetric magnetostatics, critical-current
//! load line, cryogenic and mechanical margins, a three-phase diode-rectifier
//! transient simulation driven by ocean-wave kinematics, and a fixed-tape-length
//! design sweep.
//!
//! All internal quantities are SI (m, T, A, K, Ω, H) unless a name says
//! otherwise; the TOML config layer accepts the mm-scale units used in
//! machine drawings and converts on ingestion.

pub mod circuit;
pub mod config;
pub mod cryogenics;
pub mod error;
pub mod excitation;
pub mod geometry;
pub mod magnetostatics;
pub mod math;
pub mod mechanics;
pub mod optimizer;
pub mod report;
pub mod superconductor;

pub use error::{Result, WecError};

/// Vacuum permeability [H/m].
pub const MU_0: f64 = 1.256_637_061_435_917_3e-6;
