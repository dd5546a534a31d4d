use serde::{Deserialize, Serialize};

use crate::dynamics::PitchPlantParams;
use crate::error::{Error, Result};

/// Tuning of the pitch Kalman filter.
///
/// `q_pitch` and `q_rate` are continuous white-noise intensities on the
/// pitch and pitch-rate states; the discrete process covariance is
/// `diag(q_pitch, q_rate)·dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KalmanParams {
    pub enabled: bool,
    pub q_pitch: f64,
    pub q_rate: f64,
    /// Measurement variance r, deg², of one update made every
    /// `variance_period` seconds. At other step sizes the filter keeps the
    /// same noise density and uses `r·variance_period/dt`, so the estimate
    /// converges as dt shrinks.
    pub measurement_variance: f64,
    pub variance_period: f64,
    /// Feed the applied control torque into the prediction. When false the
    /// prediction is the unforced plant and the control torque is treated as
    /// part of the process noise.
    pub use_control_input: bool,
    /// Diagonal of the initial covariance. `None` starts the filter at its
    /// steady-state covariance.
    pub initial_variance: Option<f64>,
}

impl Default for KalmanParams {
    fn default() -> Self {
        Self {
            enabled: true,
            q_pitch: 7.5e-4,
            q_rate: 1.2,
            measurement_variance: 0.072,
            variance_period: 1e-3,
            use_control_input: false,
            initial_variance: None,
        }
    }
}

impl KalmanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_pitch.is_finite() && self.q_pitch >= 0.0) {
            return Err(Error::config(format!("kalman.q_pitch must be >= 0, got {}", self.q_pitch)));
        }
        if !(self.q_rate.is_finite() && self.q_rate >= 0.0) {
            return Err(Error::config(format!("kalman.q_rate must be >= 0, got {}", self.q_rate)));
        }
        if !(self.measurement_variance.is_finite() && self.measurement_variance > 0.0) {
            return Err(Error::config(format!(
                "kalman.measurement_variance must be > 0, got {}",
                self.measurement_variance
            )));
        }
        if !(self.variance_period.is_finite() && self.variance_period > 0.0) {
            return Err(Error::config(format!(
                "kalman.variance_period must be > 0, got {}",
                self.variance_period
            )));
        }
        if let Some(v) = self.initial_variance {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("kalman.initial_variance must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

type Mat2 = [[f64; 2]; 2];

/// Two-state linear Kalman filter on (pitch, pitch rate) using the
/// undisturbed pitch plant as its model and the pitch angle as its
/// measurement.
#[derive(Debug, Clone)]
pub struct PitchKalman {
    f: Mat2,
    g: [f64; 2],
    q: [f64; 2],
    r: f64,
    use_control: bool,
    enabled: bool,
    x: [f64; 2],
    p: Mat2,
    gain: [f64; 2],
}

impl PitchKalman {
    pub fn new(params: &KalmanParams, plant: &PitchPlantParams, dt: f64, initial_pitch: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::config(format!("kalman filter requires dt > 0, got {dt}")));
        }
        params.validate()?;
        plant.validate()?;
        let a = plant.damping / plant.inertia;
        // Exact discretisation of ω̈ = −a·ω̇ + c/J.
        let (decay, integ) = if a > 0.0 {
            let e = (-a * dt).exp();
            (e, (1.0 - e) / a)
        } else {
            (1.0, dt)
        };
        let g = if a > 0.0 {
            [(dt - integ) / (a * plant.inertia), integ / plant.inertia]
        } else {
            [dt * dt / (2.0 * plant.inertia), dt / plant.inertia]
        };
        let mut filter = Self {
            f: [[1.0, integ], [0.0, decay]],
            g,
            q: [params.q_pitch * dt, params.q_rate * dt],
            r: params.measurement_variance * params.variance_period / dt,
            use_control: params.use_control_input,
            enabled: params.enabled,
            x: [initial_pitch, 0.0],
            p: [[0.0; 2]; 2],
            gain: [0.0, 0.0],
        };
        filter.p = match params.initial_variance {
            Some(p0) => [[p0, 0.0], [0.0, p0]],
            None => filter.steady_state().0,
        };
        Ok(filter)
    }

    /// One covariance recursion: prior `p` to (posterior, gain).
    fn riccati(&self, p: &Mat2) -> (Mat2, [f64; 2]) {
        let f = &self.f;
        // F·P·Fᵀ + Q with F upper triangular.
        let fp00 = p[0][0] + f[0][1] * p[1][0];
        let fp01 = p[0][1] + f[0][1] * p[1][1];
        let fp11 = f[1][1] * p[1][1];
        let m00 = fp00 + fp01 * f[0][1] + self.q[0];
        let m01 = fp01 * f[1][1];
        let m11 = fp11 * f[1][1] + self.q[1];

        let s = m00 + self.r;
        let k = [m00 / s, m01 / s];
        // Joseph form keeps the covariance symmetric positive definite.
        let a00 = 1.0 - k[0];
        let a10 = -k[1];
        let n00 = a00 * a00 * m00 + k[0] * k[0] * self.r;
        let n01 = a00 * (a10 * m00 + m01) + k[0] * k[1] * self.r;
        let n11 = a10 * a10 * m00 + 2.0 * a10 * m01 + m11 + k[1] * k[1] * self.r;
        ([[n00, n01], [n01, n11]], k)
    }

    /// Fixed point of the covariance recursion and its gain.
    pub fn steady_state(&self) -> (Mat2, [f64; 2]) {
        let mut p = [[self.r, 0.0], [0.0, self.r]];
        let mut k = [0.0; 2];
        for _ in 0..10_000_000 {
            let (next, gain) = self.riccati(&p);
            let change = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (next[i][j] - p[i][j]).abs() / next[i][j].abs().max(1e-300))
                .fold(0.0, f64::max);
            p = next;
            k = gain;
            if change < 1e-14 {
                break;
            }
        }
        (p, k)
    }

    /// Predicts over one step under `control`, then corrects with
    /// `measurement`. Returns the posterior pitch estimate. A disabled
    /// filter passes the measurement through.
    pub fn step(&mut self, measurement: f64, control: f64) -> f64 {
        if !self.enabled {
            self.x = [measurement, self.x[1]];
            return measurement;
        }
        let f = &self.f;
        let u = if self.use_control { control } else { 0.0 };
        let x = [
            f[0][0] * self.x[0] + f[0][1] * self.x[1] + self.g[0] * u,
            f[1][1] * self.x[1] + self.g[1] * u,
        ];
        let (p, k) = self.riccati(&self.p);
        let innovation = measurement - x[0];
        self.x = [x[0] + k[0] * innovation, x[1] + k[1] * innovation];
        self.p = p;
        self.gain = k;
        self.x[0]
    }

    pub fn estimate(&self) -> (f64, f64) {
        (self.x[0], self.x[1])
    }

    pub fn covariance(&self) -> Mat2 {
        self.p
    }

    /// Gain used by the most recent update.
    pub fn gain(&self) -> [f64; 2] {
        self.gain
    }

    pub fn transition(&self) -> Mat2 {
        self.f
    }

    pub fn process_noise(&self) -> [f64; 2] {
        self.q
    }
}

/// Free-function form of [`PitchKalman::step`].
pub fn kalman_step(filter: &mut PitchKalman, measurement: f64, control: f64) -> f64 {
    filter.step(measurement, control)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PLANT: PitchPlantParams = PitchPlantParams {
        inertia: 40.0,
        damping: 6.0,
    };

    fn params(r: f64, use_control: bool) -> KalmanParams {
        KalmanParams {
            measurement_variance: r,
            use_control_input: use_control,
            ..KalmanParams::default()
        }
    }

    #[test]
    fn huge_measurement_variance_ignores_measurements() {
        let dt = 1e-3;
        let mut kf = PitchKalman::new(&params(1e12, true), &PLANT, dt, 5.0).unwrap();
        // Open-loop propagation of the same model.
        let (mut w, mut wd) = (5.0, 0.0);
        let a = PLANT.damping / PLANT.inertia;
        for k in 0..2000 {
            let c = 30.0 * ((k as f64) * dt).sin();
            let est = kf.step(w + (k as f64).sin(), c);
            let e = (-a * dt).exp();
            w += (1.0 - e) / a * wd + (dt - (1.0 - e) / a) / (a * PLANT.inertia) * c;
            wd = e * wd + (1.0 - e) / a / PLANT.inertia * c;
            assert!((est - w).abs() < 1e-6, "k={k} est={est} w={w}");
        }
    }

    #[test]
    fn tiny_measurement_variance_follows_measurements() {
        let mut kf = PitchKalman::new(&params(1e-12, false), &PLANT, 1e-3, 3.0).unwrap();
        for k in 0..500 {
            let z = (k as f64 * 0.01).cos() * 3.0;
            let est = kf.step(z, 0.0);
            assert!((est - z).abs() < 1e-6, "k={k} est={est} z={z}");
        }
    }

    #[test]
    fn rejects_non_positive_measurement_variance() {
        assert!(PitchKalman::new(&params(0.0, false), &PLANT, 1e-3, 0.0).is_err());
        assert!(PitchKalman::new(&params(-1.0, false), &PLANT, 1e-3, 0.0).is_err());
    }

    #[test]
    fn covariance_stays_symmetric_positive_definite() {
        let mut kf = PitchKalman::new(&KalmanParams::default(), &PLANT, 1e-3, 0.0).unwrap();
        for k in 0..5000 {
            kf.step((k as f64 * 1e-3).sin(), 0.0);
            let p = kf.covariance();
            assert_eq!(p[0][1], p[1][0]);
            assert!(p[0][0] > 0.0 && p[1][1] > 0.0);
            assert!(p[0][0] * p[1][1] - p[0][1] * p[0][1] > 0.0);
        }
    }

    #[test]
    fn disabled_filter_passes_measurement_through() {
        let p = KalmanParams {
            enabled: false,
            ..KalmanParams::default()
        };
        let mut kf = PitchKalman::new(&p, &PLANT, 1e-3, 0.0).unwrap();
        assert_eq!(kf.step(4.2, 100.0), 4.2);
    }

    #[test]
    fn zero_damping_model() {
        let plant = PitchPlantParams {
            inertia: 2.0,
            damping: 0.0,
        };
        let kf = PitchKalman::new(&params(1e12, true), &plant, 0.1, 0.0).unwrap();
        let f = kf.transition();
        assert_relative_eq!(f[0][1], 0.1);
        assert_relative_eq!(f[1][1], 1.0);
    }
}
