use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parallel PID gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Derivative filter time constant in seconds. `None` means two
    /// simulation steps.
    pub derivative_filter: Option<f64>,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 44.0,
            ki: 23.4,
            kd: 24.0,
            derivative_filter: Some(0.027),
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !v.is_finite() {
                return Err(Error::config(format!("pid.{name} must be finite, got {v}")));
            }
        }
        if let Some(tf) = self.derivative_filter {
            if !(tf.is_finite() && tf >= 0.0) {
                return Err(Error::config(format!("pid.derivative_filter must be >= 0, got {tf}")));
            }
        }
        Ok(())
    }

    pub fn filter_time_constant(&self, dt: f64) -> f64 {
        self.derivative_filter.unwrap_or(2.0 * dt)
    }
}

/// Integrator and derivative-filter memory.
///
/// A fresh controller is at rest: the previous error is zero, so a non-zero
/// first error passes through the derivative path as a step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    integral: f64,
    prev_error: f64,
    derivative: f64,
    started: bool,
}

impl PidState {
    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn derivative(&self) -> f64 {
        self.derivative
    }
}

/// Advances the controller by one sample and returns its output.
///
/// The integral is trapezoidal from the first sample on. The derivative of
/// the error goes through a first-order filter (backward Euler) with time
/// constant `tau_f`; `tau_f = 0` is the raw backward difference.
pub fn pid_step(gains: &PidGains, error: f64, state: &mut PidState, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::config(format!("pid step requires dt > 0, got {dt}")));
    }
    if !error.is_finite() {
        return Err(Error::config("pid received a non-finite error"));
    }
    if state.started {
        state.integral += 0.5 * (error + state.prev_error) * dt;
    }
    let tau_f = gains.filter_time_constant(dt);
    let delta = error - state.prev_error;
    state.derivative = (tau_f * state.derivative + delta) / (tau_f + dt);
    state.prev_error = error;
    state.started = true;
    Ok(gains.kp * error + gains.ki * state.integral + gains.kd * state.derivative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn raw() -> PidGains {
        PidGains {
            derivative_filter: Some(0.0),
            ..PidGains::default()
        }
    }

    #[test]
    fn constant_error() {
        let g = raw();
        let dt = 1e-3;
        let mut s = PidState::default();
        for k in 0..2000 {
            let u = pid_step(&g, 1.0, &mut s, dt).unwrap();
            let t = k as f64 * dt;
            if k > 0 {
                assert_relative_eq!(u, 44.0 + 23.4 * t, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn first_sample_sees_the_step() {
        let g = raw();
        let dt = 1e-3;
        let mut s = PidState::default();
        let u = pid_step(&g, 1.0, &mut s, dt).unwrap();
        assert_relative_eq!(u, 44.0 + 24.0 / dt, epsilon = 1e-9);
    }

    #[test]
    fn zero_error_is_silent() {
        let g = PidGains::default();
        let mut s = PidState::default();
        for _ in 0..100 {
            assert_eq!(pid_step(&g, 0.0, &mut s, 1e-3).unwrap(), 0.0);
        }
    }

    #[test]
    fn ramp_error() {
        // ∫t = t²/2 exactly under the trapezoid rule; d/dt t = 1.
        let g = raw();
        let dt = 1e-3;
        let mut s = PidState::default();
        for k in 0..3000 {
            let t = k as f64 * dt;
            let u = pid_step(&g, t, &mut s, dt).unwrap();
            if k > 0 {
                assert_relative_eq!(u, 44.0 * t + 11.7 * t * t + 24.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn proportional_only_is_memoryless() {
        let g = PidGains {
            kp: 3.5,
            ki: 0.0,
            kd: 0.0,
            derivative_filter: None,
        };
        let mut s = PidState::default();
        for e in [1.0, -2.0, 0.25, 7.0, -0.5] {
            assert_eq!(pid_step(&g, e, &mut s, 1e-3).unwrap(), 3.5 * e);
        }
    }

    #[test]
    fn filtered_derivative_preserves_step_area() {
        // A unit error step through the filter integrates to kd·1.
        let g = PidGains {
            kp: 0.0,
            ki: 0.0,
            kd: 1.0,
            derivative_filter: Some(0.01),
        };
        let dt = 1e-4;
        let mut s = PidState::default();
        let area: f64 = (0..20_000).map(|_| pid_step(&g, 1.0, &mut s, dt).unwrap() * dt).sum();
        assert_relative_eq!(area, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut s = PidState::default();
        assert!(pid_step(&PidGains::default(), f64::NAN, &mut s, 1e-3).is_err());
        assert!(pid_step(&PidGains::default(), 1.0, &mut s, 0.0).is_err());
        let g = PidGains {
            derivative_filter: Some(-1.0),
            ..PidGains::default()
        };
        assert!(g.validate().is_err());
    }
}
