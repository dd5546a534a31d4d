use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lead network (a·T·s + 1)/(T·s + 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompensatorParams {
    pub enabled: bool,
    /// Lead ratio a; a > 1 advances phase.
    pub ratio: f64,
    /// Time constant T, seconds.
    pub time_constant: f64,
}

impl Default for CompensatorParams {
    fn default() -> Self {
        Self {
            enabled: true,
            ratio: 11.0,
            time_constant: 0.01,
        }
    }
}

impl CompensatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio.is_finite() && self.ratio > 0.0) {
            return Err(Error::config(format!("compensator.ratio must be > 0, got {}", self.ratio)));
        }
        if !(self.time_constant.is_finite() && self.time_constant > 0.0) {
            return Err(Error::config(format!(
                "compensator.time_constant must be > 0, got {}",
                self.time_constant
            )));
        }
        Ok(())
    }

    /// Frequency of maximum phase lead, 1/(T·√a).
    pub fn peak_frequency(&self) -> f64 {
        1.0 / (self.time_constant * self.ratio.sqrt())
    }

    /// Maximum phase lead, radians.
    pub fn max_phase_lead(&self) -> f64 {
        ((self.ratio - 1.0) / (self.ratio + 1.0)).asin()
    }
}

/// Bilinear-transform realisation of the lead network, direct form I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadFilter {
    b0: f64,
    b1: f64,
    a1: f64,
    prev_in: f64,
    prev_out: f64,
}

impl LeadFilter {
    /// Fails when `dt > T/2`. A disabled compensator is the identity.
    pub fn new(params: &CompensatorParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::config(format!("lead filter requires dt > 0, got {dt}")));
        }
        if !params.enabled {
            return Ok(Self {
                b0: 1.0,
                b1: 0.0,
                a1: 0.0,
                prev_in: 0.0,
                prev_out: 0.0,
            });
        }
        params.validate()?;
        let t = params.time_constant;
        if dt > t / 2.0 {
            return Err(Error::config(format!(
                "step {dt} s is too coarse for the lead time constant {t} s (need dt <= T/2)"
            )));
        }
        let k = 2.0 / dt;
        let den = t * k + 1.0;
        Ok(Self {
            b0: (params.ratio * t * k + 1.0) / den,
            b1: (1.0 - params.ratio * t * k) / den,
            a1: (1.0 - t * k) / den,
            prev_in: 0.0,
            prev_out: 0.0,
        })
    }

    /// Starts the filter in steady state at `value` instead of at rest.
    pub fn with_steady_state(mut self, value: f64) -> Self {
        self.prev_in = value;
        self.prev_out = value;
        self
    }

    pub fn step(&mut self, input: f64) -> f64 {
        let out = self.b0 * input + self.b1 * self.prev_in - self.a1 * self.prev_out;
        self.prev_in = input;
        self.prev_out = out;
        out
    }

    /// Immediate response to a unit step from rest.
    pub fn instantaneous_gain(&self) -> f64 {
        self.b0
    }
}

/// Free-function form of [`LeadFilter::step`].
pub fn lead_step(filter: &mut LeadFilter, input: f64) -> f64 {
    filter.step(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_filter(dt: f64) -> LeadFilter {
        LeadFilter::new(&CompensatorParams::default(), dt).unwrap()
    }

    #[test]
    fn unit_dc_gain() {
        let mut f = default_filter(1e-3);
        let mut y = 0.0;
        for _ in 0..2000 {
            y = f.step(2.5);
        }
        assert_relative_eq!(y, 2.5, epsilon = 1e-9);
    }

    #[test]
    fn step_response_matches_continuous_lead() {
        // Continuous response from rest: 1 + (a − 1)·e^(−t/T).
        let p = CompensatorParams::default();
        let dt = 1e-6;
        let mut f = LeadFilter::new(&p, dt).unwrap();
        assert_relative_eq!(f.instantaneous_gain(), 11.0, max_relative = 1e-3);
        for k in 0..50_000 {
            let y = f.step(1.0);
            let t = k as f64 * dt;
            let exact = 1.0 + (p.ratio - 1.0) * (-t / p.time_constant).exp();
            if k >= 3 {
                assert!((y - exact).abs() / exact < 1e-3, "k={k} y={y} exact={exact}");
            }
        }
    }

    #[test]
    fn too_coarse_step_rejected() {
        assert!(matches!(
            LeadFilter::new(&CompensatorParams::default(), 0.006),
            Err(Error::Config(_))
        ));
        assert!(LeadFilter::new(&CompensatorParams::default(), 0.005).is_ok());
    }

    #[test]
    fn unit_ratio_and_disabled_are_identity() {
        let unit = CompensatorParams {
            ratio: 1.0,
            ..CompensatorParams::default()
        };
        let off = CompensatorParams {
            enabled: false,
            ..CompensatorParams::default()
        };
        let mut a = LeadFilter::new(&unit, 1e-3).unwrap();
        let mut b = LeadFilter::new(&off, 1e-3).unwrap();
        for x in [1.0, -3.0, 0.5, 8.0] {
            assert_relative_eq!(a.step(x), x, epsilon = 1e-12);
            assert_eq!(b.step(x), x);
        }
    }

    #[test]
    fn halving_step_converges() {
        let p = CompensatorParams::default();
        let input = |t: f64| (7.0 * t).sin() + 0.3 * (40.0 * t).sin();
        let coarse_dt = 1e-3;
        let mut coarse = LeadFilter::new(&p, coarse_dt).unwrap();
        let mut fine = LeadFilter::new(&p, coarse_dt / 2.0).unwrap();
        let mut fine_out = Vec::new();
        for k in 0..4000 {
            fine_out.push(fine.step(input(k as f64 * coarse_dt / 2.0)));
        }
        for k in 0..2000 {
            let c = coarse.step(input(k as f64 * coarse_dt));
            let f = fine_out[2 * k];
            if k >= 3 && f.abs() > 0.05 {
                assert!(((c - f) / f).abs() < 0.01, "k={k} c={c} f={f}");
            }
        }
    }

    #[test]
    fn phase_lead_formulas() {
        let p = CompensatorParams::default();
        assert_relative_eq!(p.max_phase_lead().to_degrees(), 56.44, epsilon = 0.01);
        assert_relative_eq!(p.peak_frequency(), 1.0 / (0.01 * 11f64.sqrt()), epsilon = 1e-12);
    }
}
