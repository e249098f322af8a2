//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, WecError>;

#[derive(Debug, Error)]
pub enum WecError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("evaluation point within {epsilon_m:.3e} m of the filament at (r={r_m} m, z={z_m} m)")]
    SingularPoint { r_m: f64, z_m: f64, epsilon_m: f64 },

    #[error("temperature {t_k} K outside valid range [{lo_k}, {hi_k}] K")]
    TemperatureRange { t_k: f64, lo_k: f64, hi_k: f64 },

    #[error("table query {x} outside tabulated range [{lo}, {hi}]")]
    TableRange { x: f64, lo: f64, hi: f64 },

    #[error("load line did not converge after {iterations} iterations (bracket [{lo_a}, {hi_a}] A)")]
    LoadLineNoConvergence { iterations: usize, lo_a: f64, hi_a: f64 },

    #[error("operating current {i_op_a} A is at or above critical current {i_c_a} A")]
    NegativeMargin { i_op_a: f64, i_c_a: f64 },

    #[error("diode state machine did not settle at t = {t_s} s (conduction states {states:#08b})")]
    StateMachine { t_s: f64, states: u8 },

    #[error("analysis window {window_s} s shorter than one wave period {period_s} s")]
    WindowTooShort { window_s: f64, period_s: f64 },

    #[error("spectrum is degenerate: maximum energy in the DC bin, no fundamental")]
    DegenerateSpectrum,

    #[error("empty feasible set: no sweep candidate satisfies the operating constraints")]
    EmptyFeasibleSet,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
