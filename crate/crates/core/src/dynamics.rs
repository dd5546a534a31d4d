//! Continuous-time physical models.
//!
//! The pitch plant works in loop units (degrees, torque in the same
//! dimensionless scale as the controller gains). The translational and
//! hinge-moment calculators work in SI.

use serde::{Deserialize, Serialize};

use crate::aero_sizing::{AeroDerivatives, MissileConfig};
use crate::error::{require_positive, Error, Result};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Rotational pitch plant: J·ω̈ = c − λ·ω̇ − d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchPlantParams {
    pub inertia: f64,
    /// Aerodynamic resistance λ, torque per unit pitch rate.
    pub damping: f64,
}

impl Default for PitchPlantParams {
    fn default() -> Self {
        Self {
            inertia: 40.0,
            damping: 6.0,
        }
    }
}

impl PitchPlantParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.inertia.is_finite() && self.inertia > 0.0) {
            return Err(Error::config(format!("plant.inertia must be > 0, got {}", self.inertia)));
        }
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(Error::config(format!("plant.damping must be >= 0, got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PitchState {
    /// Pitch angle, degrees.
    pub pitch: f64,
    /// Pitch rate, degrees per second.
    pub rate: f64,
}

impl PitchState {
    pub fn new(pitch: f64, rate: f64) -> Self {
        Self { pitch, rate }
    }

    pub fn is_finite(&self) -> bool {
        self.pitch.is_finite() && self.rate.is_finite()
    }
}

/// (ω̇, ω̈) for control torque `control` and disturbance torque `disturbance`.
pub fn pitch_plant_deriv(
    params: &PitchPlantParams,
    state: PitchState,
    control: f64,
    disturbance: f64,
) -> PitchState {
    let j = params.inertia;
    PitchState {
        pitch: state.rate,
        rate: control / j - params.damping / j * state.rate - disturbance / j,
    }
}

/// One classical fourth-order Runge–Kutta step of the pitch plant. The
/// control torque is held over the step; the disturbance is sampled at the
/// start, midpoint and end.
pub fn rk4_step(
    params: &PitchPlantParams,
    state: PitchState,
    control: f64,
    disturbance: impl Fn(f64) -> f64,
    t: f64,
    dt: f64,
) -> PitchState {
    let f = |s: PitchState, tau: f64| pitch_plant_deriv(params, s, control, disturbance(tau));
    let add = |s: PitchState, k: PitchState, h: f64| PitchState {
        pitch: s.pitch + h * k.pitch,
        rate: s.rate + h * k.rate,
    };
    let half = 0.5 * dt;
    let k1 = f(state, t);
    let k2 = f(add(state, k1, half), t + half);
    let k3 = f(add(state, k2, half), t + half);
    let k4 = f(add(state, k3, dt), t + dt);
    PitchState {
        pitch: state.pitch + dt / 6.0 * (k1.pitch + 2.0 * k2.pitch + 2.0 * k3.pitch + k4.pitch),
        rate: state.rate + dt / 6.0 * (k1.rate + 2.0 * k2.rate + 2.0 * k3.rate + k4.rate),
    }
}

/// Forces at one flight condition, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightPoint {
    pub thrust: f64,
    pub drag: f64,
    pub lift: f64,
    /// Angle of attack, radians.
    pub alpha: f64,
    pub mass: f64,
    pub gravity: f64,
}

impl FlightPoint {
    pub fn new(thrust: f64, drag: f64, lift: f64, alpha: f64, mass: f64) -> Self {
        Self {
            thrust,
            drag,
            lift,
            alpha,
            mass,
            gravity: STANDARD_GRAVITY,
        }
    }
}

/// Body-axis accelerations, in multiples of g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodyAccel {
    pub axial: f64,
    /// Normal acceleration a_N.
    pub normal: f64,
}

/// Reduced translational equations; both components are divided by g·m so
/// the result is in G.
pub fn translational_accel(fp: &FlightPoint) -> Result<BodyAccel> {
    require_positive("mass", fp.mass)?;
    require_positive("gravity", fp.gravity)?;
    let w = fp.gravity * fp.mass;
    let (s, c) = fp.alpha.sin_cos();
    Ok(BodyAccel {
        axial: (fp.thrust - fp.drag * c + fp.lift * s) / w,
        // Same-sign sum, as published.
        normal: (fp.drag * s + fp.lift * c) / w,
    })
}

pub fn resultant_speed(vx: f64, vy: f64) -> f64 {
    vx.hypot(vy)
}

/// Flight-path turn rate a_N/V, rad/s, for a_N in m/s².
pub fn flight_path_rate(normal_accel: f64, speed: f64) -> Result<f64> {
    let v = require_positive("speed", speed)?;
    Ok(normal_accel / v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftDrag {
    pub lift: f64,
    pub drag: f64,
}

/// Lift from the wing with the α-dependent slope, drag from the base
/// coefficient on the body reference area. No induced drag.
pub fn lift_drag(
    dynamic_pressure: f64,
    alpha: f64,
    config: &MissileConfig,
    derivs: &AeroDerivatives,
) -> Result<LiftDrag> {
    if !(dynamic_pressure >= 0.0) {
        return Err(Error::Domain {
            name: "dynamic_pressure",
            value: dynamic_pressure,
            reason: "must be non-negative",
        });
    }
    let cl = derivs.cl0 + derivs.lift_slope(alpha) * alpha;
    Ok(LiftDrag {
        lift: dynamic_pressure * config.wing_area * cl,
        drag: dynamic_pressure * config.reference_area() * derivs.cd0,
    })
}

/// Inputs to the hinge-moment gain. `alpha_per_delta` is the caller's
/// α(s)/δ(s) evaluated at the frequency of interest (0 gives the pure
/// elevator term).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HingeMomentInputs {
    pub elevator_area: f64,
    pub dynamic_pressure: f64,
    pub hinge_arm: f64,
    pub cm_delta: f64,
    pub cm_alpha: f64,
    pub alpha_per_delta: f64,
}

impl Default for HingeMomentInputs {
    fn default() -> Self {
        Self {
            elevator_area: 0.0865,
            dynamic_pressure: 23811.0,
            hinge_arm: 0.069,
            cm_delta: 0.267,
            cm_alpha: -0.300,
            alpha_per_delta: 0.0,
        }
    }
}

/// S_T·q·d_E·(C_Mδ + C_Mα·κ), torque per radian of deflection.
pub fn hinge_moment_gain(inputs: &HingeMomentInputs) -> Result<f64> {
    require_positive("elevator_area", inputs.elevator_area)?;
    if !(inputs.dynamic_pressure >= 0.0) {
        return Err(Error::Domain {
            name: "dynamic_pressure",
            value: inputs.dynamic_pressure,
            reason: "must be non-negative",
        });
    }
    require_positive("hinge_arm", inputs.hinge_arm)?;
    Ok(inputs.elevator_area
        * inputs.dynamic_pressure
        * inputs.hinge_arm
        * (inputs.cm_delta + inputs.cm_alpha * inputs.alpha_per_delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const P: PitchPlantParams = PitchPlantParams {
        inertia: 40.0,
        damping: 6.0,
    };

    #[test]
    fn balanced_torques_give_no_acceleration() {
        let d = pitch_plant_deriv(&P, PitchState::new(3.0, 0.0), 5.0, 5.0);
        assert_eq!(d.rate, 0.0);
    }

    #[test]
    fn plant_direct_arithmetic() {
        let d = pitch_plant_deriv(&P, PitchState::default(), 40.0, 0.0);
        assert_eq!(d.rate, 1.0);
    }

    #[test]
    fn steady_rate_under_constant_torque() {
        let (c, d) = (12.0, 3.0);
        let mut s = PitchState::default();
        let dt = 0.01;
        for i in 0..20_000 {
            s = rk4_step(&P, s, c, |_| d, i as f64 * dt, dt);
        }
        assert_relative_eq!(s.rate, (c - d) / P.damping, max_relative = 1e-6);
    }

    #[test]
    fn free_decay_matches_closed_form() {
        let dt = 1e-3;
        let w0 = 5.0;
        let mut s = PitchState::new(0.0, w0);
        let tau = P.inertia / P.damping;
        for i in 0..5000 {
            s = rk4_step(&P, s, 0.0, |_| 0.0, i as f64 * dt, dt);
            let t = (i + 1) as f64 * dt;
            let exact = w0 * (-t / tau).exp();
            assert!(((s.rate - exact) / exact).abs() < 1e-3);
            if i > 0 {
                assert!(s.rate.abs() <= w0);
            }
        }
    }

    #[test]
    fn translational_examples() {
        let g_m = STANDARD_GRAVITY * 85.0;
        let a = translational_accel(&FlightPoint::new(0.0, 0.0, g_m, 0.0, 85.0)).unwrap();
        assert_relative_eq!(a.normal, 1.0, epsilon = 1e-15);

        let a = translational_accel(&FlightPoint::new(1000.0, 500.0, 0.0, 0.0, 85.0)).unwrap();
        assert_relative_eq!(a.axial, 500.0 / 833.85, epsilon = 1e-12);
        assert_relative_eq!(a.axial, 0.5996, epsilon = 1e-4);

        let a = translational_accel(&FlightPoint::new(700.0, 700.0, 0.0, 0.0, 85.0)).unwrap();
        assert_eq!(a.axial, 0.0);
        assert!(translational_accel(&FlightPoint::new(0.0, 0.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn speed_and_turn_rate_examples() {
        assert_eq!(resultant_speed(3.0, 4.0), 5.0);
        assert_eq!(resultant_speed(7.5, 0.0), 7.5);
        assert_relative_eq!(resultant_speed(250.0, 25.0), 251.247, epsilon = 1e-3);

        assert_eq!(flight_path_rate(0.0, 250.0).unwrap(), 0.0);
        assert_relative_eq!(flight_path_rate(30.0 * 9.81, 250.0).unwrap(), 1.1772, epsilon = 1e-12);
        assert_eq!(flight_path_rate(250.0, 250.0).unwrap(), 1.0);
        assert!(flight_path_rate(1.0, 0.0).is_err());
    }

    #[test]
    fn lift_drag_examples() {
        let cfg = MissileConfig {
            diameter: (0.0314 * 4.0 / std::f64::consts::PI).sqrt(),
            ..MissileConfig::default()
        };
        let ld = lift_drag(23811.0, 0.0, &cfg, &AeroDerivatives::default()).unwrap();
        assert_relative_eq!(ld.lift, 23811.0 * 0.282 * 0.924, max_relative = 1e-12);
        assert_relative_eq!(ld.lift, 6204.5, max_relative = 1e-4);
        assert_relative_eq!(ld.drag, 450.8, epsilon = 0.1);
        let zero = lift_drag(0.0, 0.1, &cfg, &AeroDerivatives::default()).unwrap();
        assert_eq!((zero.lift, zero.drag), (0.0, 0.0));
        assert!(lift_drag(-1.0, 0.0, &cfg, &AeroDerivatives::default()).is_err());
    }

    #[test]
    fn hinge_moment_examples() {
        let base = HingeMomentInputs::default();
        assert_relative_eq!(hinge_moment_gain(&base).unwrap(), 37.94, epsilon = 0.01);
        let coupled = HingeMomentInputs {
            alpha_per_delta: 1.0,
            ..base
        };
        let k = 0.0865 * 23811.0 * 0.069;
        assert_relative_eq!(hinge_moment_gain(&coupled).unwrap(), k * -0.033, max_relative = 1e-12);
        assert_relative_eq!(hinge_moment_gain(&coupled).unwrap(), -4.69, epsilon = 0.01);
        let still = HingeMomentInputs {
            dynamic_pressure: 0.0,
            ..base
        };
        assert_eq!(hinge_moment_gain(&still).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn plant_is_linear(c1 in -1e3f64..1e3, d1 in -1e3f64..1e3, r1 in -1e3f64..1e3,
                           c2 in -1e3f64..1e3, d2 in -1e3f64..1e3, r2 in -1e3f64..1e3) {
            let a = pitch_plant_deriv(&P, PitchState::new(0.0, r1), c1, d1);
            let b = pitch_plant_deriv(&P, PitchState::new(0.0, r2), c2, d2);
            let ab = pitch_plant_deriv(&P, PitchState::new(0.0, r1 + r2), c1 + c2, d1 + d2);
            prop_assert!((ab.rate - (a.rate + b.rate)).abs() < 1e-12 * (1.0 + ab.rate.abs()));
        }

        #[test]
        fn zero_alpha_decouples(p in 0.0f64..1e4, d in 0.0f64..1e4, l in 0.0f64..1e4, l2 in 0.0f64..1e4) {
            let a = translational_accel(&FlightPoint::new(p, d, l, 0.0, 85.0)).unwrap();
            let b = translational_accel(&FlightPoint::new(p, d, l2, 0.0, 85.0)).unwrap();
            prop_assert_eq!(a.axial, b.axial);
            let c = translational_accel(&FlightPoint::new(p * 0.5, d * 0.5, l, 0.0, 85.0)).unwrap();
            prop_assert_eq!(a.normal, c.normal);
        }

        #[test]
        fn speed_symmetric_and_triangle(x1 in -1e3f64..1e3, y1 in -1e3f64..1e3,
                                        x2 in -1e3f64..1e3, y2 in -1e3f64..1e3) {
            prop_assert_eq!(resultant_speed(x1, y1), resultant_speed(y1, x1));
            let sum = resultant_speed(x1 + x2, y1 + y2);
            prop_assert!(sum <= resultant_speed(x1, y1) + resultant_speed(x2, y2) + 1e-9);
        }
    }
}
