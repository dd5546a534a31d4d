use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sinusoidal disturbance torque `amplitude·sin(frequency·t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceParams {
    pub enabled: bool,
    pub amplitude: f64,
    /// rad/s.
    pub frequency: f64,
}

impl Default for DisturbanceParams {
    fn default() -> Self {
        Self {
            enabled: true,
            amplitude: 1.0,
            frequency: 1.0,
        }
    }
}

impl DisturbanceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::config(format!(
                "disturbance.amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.frequency.is_finite() && self.frequency >= 0.0) {
            return Err(Error::config(format!(
                "disturbance.frequency must be >= 0, got {}",
                self.frequency
            )));
        }
        Ok(())
    }
}

pub fn disturbance_at(params: &DisturbanceParams, t: f64) -> f64 {
    if params.enabled {
        params.amplitude * (params.frequency * t).sin()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sine_values() {
        let unit = DisturbanceParams::default();
        assert_eq!(disturbance_at(&unit, 0.0), 0.0);
        assert_relative_eq!(disturbance_at(&unit, std::f64::consts::FRAC_PI_2), 1.0);
        let p = DisturbanceParams {
            amplitude: 2.0,
            frequency: 3.0,
            ..unit
        };
        assert_relative_eq!(disturbance_at(&p, 1.0), 0.2822, epsilon = 1e-4);
        let off = DisturbanceParams {
            enabled: false,
            ..unit
        };
        assert_eq!(disturbance_at(&off, 1.0), 0.0);
    }

    #[test]
    fn negative_amplitude_rejected() {
        let p = DisturbanceParams {
            amplitude: -1.0,
            ..DisturbanceParams::default()
        };
        assert!(p.validate().is_err());
    }
}
