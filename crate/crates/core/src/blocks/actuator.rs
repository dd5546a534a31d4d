use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// n·ω_n²/(s² + 2μω_n·s + ω_n²)·e^(−τs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorParams {
    pub gain: f64,
    pub natural_frequency: f64,
    pub damping: f64,
    /// Transport delay, seconds.
    pub delay: f64,
}

impl Default for ActuatorParams {
    fn default() -> Self {
        Self {
            gain: 7.0,
            natural_frequency: 50.0,
            damping: 0.5,
            delay: 0.1,
        }
    }
}

impl ActuatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain != 0.0) {
            return Err(Error::config(format!("actuator.gain must be non-zero, got {}", self.gain)));
        }
        if !(self.natural_frequency.is_finite() && self.natural_frequency > 0.0) {
            return Err(Error::config(format!(
                "actuator.natural_frequency must be > 0, got {}",
                self.natural_frequency
            )));
        }
        if !(self.damping.is_finite() && self.damping > 0.0) {
            return Err(Error::config(format!("actuator.damping must be > 0, got {}", self.damping)));
        }
        if !(self.delay.is_finite() && self.delay >= 0.0) {
            return Err(Error::config(format!("actuator.delay must be >= 0, got {}", self.delay)));
        }
        Ok(())
    }

    /// Number of whole steps in the delay, or an error when the delay is not
    /// an integer multiple of `dt`.
    pub fn delay_steps(&self, dt: f64) -> Result<usize> {
        steps_in(self.delay, dt).ok_or_else(|| {
            Error::config(format!(
                "actuator.delay {} s is not an integer multiple of the step {dt} s",
                self.delay
            ))
        })
    }
}

/// `span / dt` as an integer when it is one to within 1e-9 relative.
pub(crate) fn steps_in(span: f64, dt: f64) -> Option<usize> {
    let n = span / dt;
    let r = n.round();
    if r >= 0.0 && (n - r).abs() <= 1e-9 * r.max(1.0) {
        Some(r as usize)
    } else {
        None
    }
}

/// e^(A·h) for a 2×2 matrix, via the Cayley–Hamilton closed form.
fn expm2(a: [[f64; 2]; 2], h: f64) -> [[f64; 2]; 2] {
    let half_trace = 0.5 * (a[0][0] + a[1][1]);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = half_trace * half_trace - det;
    // e^(Ah) = e^(s·h)·[c0·I + c1·(A − sI)]
    let (c0, c1) = if disc > 1e-14 {
        let q = disc.sqrt();
        ((q * h).cosh(), (q * h).sinh() / q)
    } else if disc < -1e-14 {
        let q = (-disc).sqrt();
        ((q * h).cos(), (q * h).sin() / q)
    } else {
        (1.0, h)
    };
    let scale = (half_trace * h).exp();
    let m = [
        [a[0][0] - half_trace, a[0][1]],
        [a[1][0], a[1][1] - half_trace],
    ];
    [
        [scale * (c0 + c1 * m[0][0]), scale * c1 * m[0][1]],
        [scale * c1 * m[1][0], scale * (c0 + c1 * m[1][1])],
    ]
}

/// Second-order actuator discretised with an exact zero-order hold, followed
/// by a pure transport delay.
///
/// The delay line holds one sample per step and is preloaded with the
/// initial deflection, so the output stays at that value for exactly the
/// delay regardless of the commands fed in.
#[derive(Debug, Clone)]
pub struct Actuator {
    phi: [[f64; 2]; 2],
    gamma: [f64; 2],
    /// Position and rate of the undelayed second-order section.
    state: [f64; 2],
    line: VecDeque<f64>,
}

impl Actuator {
    pub fn new(params: &ActuatorParams, dt: f64) -> Result<Self> {
        Self::with_initial(params, dt, 0.0)
    }

    /// Actuator resting at deflection `initial`, with the delay line filled
    /// with the same value.
    pub fn with_initial(params: &ActuatorParams, dt: f64, initial: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::config(format!("actuator requires dt > 0, got {dt}")));
        }
        params.validate()?;
        let slots = params.delay_steps(dt)?;
        let wn = params.natural_frequency;
        let a = [[0.0, 1.0], [-wn * wn, -2.0 * params.damping * wn]];
        let phi = expm2(a, dt);
        // Γ = A⁻¹(Φ − I)·B with B = [0, n·ω_n²]ᵀ.
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let inv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
        let b1 = params.gain * wn * wn;
        let pm = [[phi[0][0] - 1.0, phi[0][1]], [phi[1][0], phi[1][1] - 1.0]];
        let col = [pm[0][1] * b1, pm[1][1] * b1];
        let gamma = [
            inv[0][0] * col[0] + inv[0][1] * col[1],
            inv[1][0] * col[0] + inv[1][1] * col[1],
        ];
        Ok(Self {
            phi,
            gamma,
            state: [initial, 0.0],
            line: std::iter::repeat(initial).take(slots).collect(),
        })
    }

    /// Returns the deflection for the current sample, then advances the
    /// second-order section under `command` held for one step.
    pub fn step(&mut self, command: f64) -> f64 {
        let current = self.state[0];
        let out = match self.line.pop_front() {
            Some(delayed) => {
                self.line.push_back(current);
                delayed
            }
            None => current,
        };
        let [x, v] = self.state;
        self.state = [
            self.phi[0][0] * x + self.phi[0][1] * v + self.gamma[0] * command,
            self.phi[1][0] * x + self.phi[1][1] * v + self.gamma[1] * command,
        ];
        out
    }

    pub fn delay_slots(&self) -> usize {
        self.line.len()
    }
}

/// Free-function form of [`Actuator::step`].
pub fn actuator_step(actuator: &mut Actuator, command: f64) -> f64 {
    actuator.step(command)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expm_matches_series() {
        let a = [[0.0, 1.0], [-2500.0, -50.0]];
        let h = 1e-3;
        let e = expm2(a, h);
        // Truncated Taylor series to 12 terms.
        let mut term = [[1.0, 0.0], [0.0, 1.0]];
        let mut sum = term;
        for k in 1..12 {
            let mut next = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = (term[i][0] * a[0][j] + term[i][1] * a[1][j]) * h / k as f64;
                }
            }
            term = next;
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(e[i][j], sum[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn holds_initial_value_for_the_delay() {
        let p = ActuatorParams::default();
        let dt = 1e-3;
        let mut act = Actuator::with_initial(&p, dt, 2.0).unwrap();
        assert_eq!(act.delay_slots(), 100);
        // Samples at t = 0 ..= τ all report y(t − τ) with t − τ ≤ 0.
        for _ in 0..=100 {
            assert_eq!(act.step(50.0), 2.0);
        }
        assert!(act.step(50.0) != 2.0);
    }

    #[test]
    fn unit_step_final_value_is_gain() {
        let mut act = Actuator::new(&ActuatorParams::default(), 1e-3).unwrap();
        let mut y = 0.0;
        for _ in 0..2000 {
            y = act.step(1.0);
        }
        assert_relative_eq!(y, 7.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_delay_is_pure_second_order() {
        let p = ActuatorParams {
            delay: 0.0,
            ..ActuatorParams::default()
        };
        let dt = 1e-3;
        let mut act = Actuator::new(&p, dt).unwrap();
        let wn: f64 = 50.0;
        let mu: f64 = 0.5;
        let wd = wn * (1.0 - mu * mu).sqrt();
        for k in 0..500 {
            let y = act.step(1.0);
            let t = k as f64 * dt;
            let exact = 7.0 * (1.0 - (-mu * wn * t).exp() * ((wd * t).cos() + mu * wn / wd * (wd * t).sin()));
            assert_relative_eq!(y, exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn misaligned_delay_rejected() {
        let p = ActuatorParams {
            delay: 0.1005,
            ..ActuatorParams::default()
        };
        assert!(matches!(Actuator::new(&p, 1e-3), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_params_rejected() {
        for p in [
            ActuatorParams { gain: 0.0, ..Default::default() },
            ActuatorParams { natural_frequency: 0.0, ..Default::default() },
            ActuatorParams { damping: -0.1, ..Default::default() },
            ActuatorParams { delay: -0.1, ..Default::default() },
        ] {
            assert!(p.validate().is_err());
        }
    }
}
