//! Discrete-time loop blocks, each advanced once per simulation step.

pub mod actuator;
pub mod disturbance;
pub mod kalman;
pub mod lead;
pub mod noise;
pub mod pid;

pub use actuator::{actuator_step, Actuator, ActuatorParams};
pub use disturbance::{disturbance_at, DisturbanceParams};
pub use kalman::{kalman_step, KalmanParams, PitchKalman};
pub use lead::{lead_step, CompensatorParams, LeadFilter};
pub use noise::{noise_sample, NoiseParams, NoiseSource};
pub use pid::{pid_step, PidGains, PidState};
