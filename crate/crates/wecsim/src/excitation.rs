//! Ocean-wave and actuator kinematics: prescribed displacement and velocity
//! of the buoy-coupled actuator for sinusoidal and triangular waveforms.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveForm {
    Sinusoidal,
    Triangular,
}

/// Wave drive: the buoy is rigidly coupled, so actuator kinematics follow the
/// wave spec directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSpec {
    pub form: WaveForm,
    pub amplitude_m: f64,
    pub frequency_hz: f64,
    pub phase_rad: f64,
}

impl WaveSpec {
    pub fn period_s(&self) -> f64 {
        1.0 / self.frequency_hz
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitude_m <= 0.0 || self.frequency_hz <= 0.0 {
            return Err(WecError::Config(format!(
                "wave amplitude and frequency must be positive, got {} m at {} Hz",
                self.amplitude_m, self.frequency_hz
            )));
        }
        Ok(())
    }

    /// Actuator position (m) and velocity (m/s) at time `t` (s).
    ///
    /// Triangular velocity at a vertex sample is the left limit.
    pub fn actuator_state(&self, t: f64) -> (f64, f64) {
        let a = self.amplitude_m;
        let f = self.frequency_hz;
        match self.form {
            WaveForm::Sinusoidal => {
                let arg = std::f64::consts::TAU * f * t + self.phase_rad;
                (a * arg.sin(), std::f64::consts::TAU * f * a * arg.cos())
            }
            WaveForm::Triangular => {
                let theta = (f * t + self.phase_rad / std::f64::consts::TAU).rem_euclid(1.0);
                let z = if theta < 0.25 {
                    4.0 * theta
                } else if theta < 0.75 {
                    2.0 - 4.0 * theta
                } else {
                    4.0 * theta - 4.0
                };
                let v = if theta > 0.25 && theta <= 0.75 { -4.0 } else { 4.0 };
                (a * z, a * f * v)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine() -> WaveSpec {
        WaveSpec { form: WaveForm::Sinusoidal, amplitude_m: 1.25, frequency_hz: 0.167, phase_rad: 0.0 }
    }

    fn tri() -> WaveSpec {
        WaveSpec { form: WaveForm::Triangular, ..sine() }
    }

    #[test]
    fn sinusoidal_start_velocity() {
        let (z, v) = sine().actuator_state(0.0);
        assert_eq!(z, 0.0);
        // 2*pi*f*A = 1.3115 m/s (4-digit rounding)
        assert!((v - 1.3115).abs() < 5e-4, "v = {v}");
    }

    #[test]
    fn sinusoidal_quarter_period_is_amplitude() {
        let w = sine();
        let (z, _) = w.actuator_state(0.25 * w.period_s());
        assert!((z - w.amplitude_m).abs() < 1e-12);
    }

    #[test]
    fn triangular_speed_constant() {
        let w = tri();
        // |v| = 4*A*f = 0.835 m/s away from the vertices
        for i in 0..200 {
            let t = w.period_s() * (i as f64 + 0.13) / 200.0;
            let (_, v) = w.actuator_state(t);
            assert!((v.abs() - 0.835).abs() < 1e-4, "t={t} v={v}");
        }
    }

    #[test]
    fn triangular_vertex_uses_left_limit() {
        let w = tri();
        let quarter = 0.25 * w.period_s();
        let (z, v) = w.actuator_state(quarter);
        assert!((z - w.amplitude_m).abs() < 1e-12);
        assert!(v > 0.0, "vertex velocity should keep the incoming (rising) sign");
    }

    #[test]
    fn periodicity() {
        for w in [sine(), tri()] {
            for i in 0..50 {
                let t = 0.13 * i as f64;
                let (z0, v0) = w.actuator_state(t);
                let (z1, v1) = w.actuator_state(t + w.period_s());
                assert!((z0 - z1).abs() < 1e-12 * w.amplitude_m.max(1.0));
                assert!((v0 - v1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_mean_displacement_over_period() {
        for w in [sine(), tri()] {
            let n = 40_000;
            let dt = w.period_s() / n as f64;
            let mean: f64 = (0..n).map(|i| w.actuator_state(i as f64 * dt).0).sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-6, "mean {mean}");
        }
    }

    #[test]
    fn velocity_is_position_derivative() {
        for w in [sine(), tri()] {
            let h = 1e-6;
            for i in 0..100 {
                // stay away from triangular vertices
                let t = w.period_s() * (i as f64 + 0.31) / 101.0;
                let (zp, _) = w.actuator_state(t + h);
                let (zm, _) = w.actuator_state(t - h);
                let fd = (zp - zm) / (2.0 * h);
                let (_, v) = w.actuator_state(t);
                assert!((fd - v).abs() < 1e-6 * v.abs().max(1.0), "t={t} fd={fd} v={v}");
            }
        }
    }
}
