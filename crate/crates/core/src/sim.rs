//! Fixed-step simulation of the closed pitch loop.
//!
//! One step, at t_k:
//!
//! ```text
//! e = cmd − ω̂_k → PID → lead → actuator (+delay) → δ_k
//! plant RK4 over [t_k, t_k+1] under δ_k and d(t)
//! z_k+1 = ω_k+1 + n(t_k+1) → Kalman → ω̂_k+1
//! ```
//!
//! The error junction therefore sees the filtered pitch from the previous
//! step. Row k of the trace holds every signal as seen at t_k.

use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::actuator::steps_in;
use crate::blocks::{
    disturbance_at, pid_step, Actuator, ActuatorParams, CompensatorParams, DisturbanceParams, KalmanParams,
    LeadFilter, NoiseParams, NoiseSource, PidGains, PidState, PitchKalman,
};
use crate::dynamics::{rk4_step, PitchPlantParams, PitchState};
use crate::error::{Error, Result};

/// Signals larger than this are treated as a blown-up run even while still
/// representable.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Largest step that still resolves the 50 rad/s actuator mode.
pub const MAX_STEP: f64 = 0.005;

/// Every block parameter of the autopilot loop.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub pid: PidGains,
    pub compensator: CompensatorParams,
    pub actuator: ActuatorParams,
    pub plant: PitchPlantParams,
    pub disturbance: DisturbanceParams,
    pub noise: NoiseParams,
    pub kalman: KalmanParams,
}

impl LoopConfig {
    /// The configuration used for the reference step comparison: noise and the
    /// time-varying disturbance switched off.
    pub fn noiseless(mut self) -> Self {
        self.noise.enabled = false;
        self.disturbance.enabled = false;
        self
    }

    pub fn with_compensator(mut self, enabled: bool) -> Self {
        self.compensator.enabled = enabled;
        self
    }

    pub fn validate(&self, dt: f64) -> Result<()> {
        self.pid.validate()?;
        if self.compensator.enabled {
            self.compensator.validate()?;
        }
        self.actuator.validate()?;
        self.actuator.delay_steps(dt)?;
        self.plant.validate()?;
        self.disturbance.validate()?;
        self.noise.validate()?;
        if self.noise.enabled && steps_in(self.noise.sample_time, dt).is_none_or(|n| n == 0) {
            return Err(Error::config(format!(
                "noise.sample_time {} s is not an integer multiple of the step {dt} s",
                self.noise.sample_time
            )));
        }
        self.kalman.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Initial pitch ω₀, degrees.
    pub initial_pitch: f64,
    /// Commanded pitch, degrees.
    pub command: f64,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            initial_pitch: 10.0,
            command: 1.0,
            duration: 10.0,
            dt: 0.001,
            seed: 1,
        }
    }
}

impl Scenario {
    /// Number of steps; the trace has one more row than this.
    pub fn steps(&self) -> Result<usize> {
        if !(self.initial_pitch.is_finite() && self.command.is_finite()) {
            return Err(Error::config("scenario pitch values must be finite"));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::config(format!("scenario.duration must be > 0, got {}", self.duration)));
        }
        if !(self.dt > 0.0 && self.dt <= self.duration) {
            return Err(Error::config(format!(
                "scenario.dt must be in (0, duration], got {}",
                self.dt
            )));
        }
        if self.dt > MAX_STEP {
            return Err(Error::config(format!(
                "scenario.dt {} s exceeds the {MAX_STEP} s resolution limit",
                self.dt
            )));
        }
        steps_in(self.duration, self.dt).ok_or_else(|| {
            Error::config(format!(
                "scenario.duration {} s is not an integer multiple of dt {} s",
                self.duration, self.dt
            ))
        })
    }
}

/// Column names of the trace CSV, in order.
pub const TRACE_HEADER: [&str; 11] = [
    "t",
    "cmd",
    "omega",
    "omega_dot",
    "omega_meas",
    "omega_filt",
    "error",
    "u_pid",
    "u_lead",
    "delta",
    "d_t",
];

/// Uniformly sampled record of every loop signal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub t: Vec<f64>,
    pub cmd: Vec<f64>,
    pub omega: Vec<f64>,
    pub omega_dot: Vec<f64>,
    pub omega_meas: Vec<f64>,
    pub omega_filt: Vec<f64>,
    /// cmd − filtered pitch, the signal the PID acts on.
    pub error: Vec<f64>,
    pub u_pid: Vec<f64>,
    pub u_lead: Vec<f64>,
    /// Elevator deflection after the delay.
    pub delta: Vec<f64>,
    pub d_t: Vec<f64>,
}

impl Trace {
    fn with_capacity(n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            t: v(),
            cmd: v(),
            omega: v(),
            omega_dot: v(),
            omega_meas: v(),
            omega_filt: v(),
            error: v(),
            u_pid: v(),
            u_lead: v(),
            delta: v(),
            d_t: v(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn columns(&self) -> [&Vec<f64>; 11] {
        [
            &self.t,
            &self.cmd,
            &self.omega,
            &self.omega_dot,
            &self.omega_meas,
            &self.omega_filt,
            &self.error,
            &self.u_pid,
            &self.u_lead,
            &self.delta,
            &self.d_t,
        ]
    }

    fn columns_mut(&mut self) -> [&mut Vec<f64>; 11] {
        [
            &mut self.t,
            &mut self.cmd,
            &mut self.omega,
            &mut self.omega_dot,
            &mut self.omega_meas,
            &mut self.omega_filt,
            &mut self.error,
            &mut self.u_pid,
            &mut self.u_lead,
            &mut self.delta,
            &mut self.d_t,
        ]
    }

    /// Index of the first sample at or after `time`.
    pub fn index_at(&self, time: f64) -> usize {
        self.t.partition_point(|&t| t < time - 1e-12)
    }

    /// Writes the trace as CSV. Values use Rust's shortest round-trip
    /// formatting, so reading the file back is lossless.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", TRACE_HEADER.join(","))?;
        let cols = self.columns();
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            for (j, c) in cols.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&c[i].to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty trace file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        if header.trim_end() != TRACE_HEADER.join(",") {
            return Err(Error::Parse(format!(
                "unexpected trace header `{}`; expected `{}`",
                header.trim_end(),
                TRACE_HEADER.join(",")
            )));
        }
        let mut trace = Trace::default();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let row = n + 2;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != TRACE_HEADER.len() {
                return Err(Error::Parse(format!(
                    "line {row}: expected {} fields, found {}",
                    TRACE_HEADER.len(),
                    fields.len()
                )));
            }
            for ((col, field), name) in trace.columns_mut().into_iter().zip(fields).zip(TRACE_HEADER) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {row}, column `{name}`: `{field}` is not a number")))?;
                col.push(v);
            }
        }
        if trace.is_empty() {
            return Err(Error::Parse("trace file has no rows".into()));
        }
        if trace.t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse("trace time column is not strictly increasing".into()));
        }
        Ok(trace)
    }
}

fn check(step: usize, time: f64, signals: &[(&'static str, f64)]) -> Result<()> {
    for &(signal, v) in signals {
        if !v.is_finite() || v.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Diverged { step, time, signal });
        }
    }
    Ok(())
}

/// Runs one closed-loop simulation.
pub fn run_scenario(config: &LoopConfig, scenario: &Scenario) -> Result<Trace> {
    let n = scenario.steps()?;
    let dt = scenario.dt;
    config.validate(dt)?;

    let mut pid = PidState::default();
    let mut lead = LeadFilter::new(&config.compensator, dt)?;
    let mut actuator = Actuator::new(&config.actuator, dt)?;
    let mut noise = NoiseSource::new(&config.noise, scenario.seed)?;
    let mut kalman = PitchKalman::new(&config.kalman, &config.plant, dt, scenario.initial_pitch)?;
    let disturbance = |t: f64| disturbance_at(&config.disturbance, t);

    let mut trace = Trace::with_capacity(n + 1);
    let mut state = PitchState::new(scenario.initial_pitch, 0.0);
    let mut meas = scenario.initial_pitch + noise.sample(0.0);
    let mut filt = scenario.initial_pitch;

    for k in 0..=n {
        let t = k as f64 * dt;
        let error = scenario.command - filt;
        let u_pid = pid_step(&config.pid, error, &mut pid, dt)
            .map_err(|_| Error::Diverged { step: k, time: t, signal: "error" })?;
        let u_lead = lead.step(u_pid);
        let delta = actuator.step(u_lead);
        let d_t = disturbance(t);
        check(k, t, &[("u_pid", u_pid), ("u_lead", u_lead), ("delta", delta)])?;

        trace.t.push(t);
        trace.cmd.push(scenario.command);
        trace.omega.push(state.pitch);
        trace.omega_dot.push(state.rate);
        trace.omega_meas.push(meas);
        trace.omega_filt.push(filt);
        trace.error.push(error);
        trace.u_pid.push(u_pid);
        trace.u_lead.push(u_lead);
        trace.delta.push(delta);
        trace.d_t.push(d_t);

        if k == n {
            break;
        }
        state = rk4_step(&config.plant, state, delta, disturbance, t, dt);
        let t_next = (k + 1) as f64 * dt;
        check(k + 1, t_next, &[("omega", state.pitch), ("omega_dot", state.rate)])?;
        meas = state.pitch + noise.sample(t_next);
        filt = kalman.step(meas, delta);
        check(k + 1, t_next, &[("omega_filt", filt)])?;
    }
    Ok(trace)
}

/// Runs the scenario without (A) and with (B) the compensator, same seed.
pub fn run_ab_pair(config: &LoopConfig, scenario: &Scenario) -> Result<(Trace, Trace)> {
    let (a, b) = rayon::join(
        || run_scenario(&config.with_compensator(false), scenario),
        || run_scenario(&config.with_compensator(true), scenario),
    );
    let tag = |leg: char| move |e: Error| Error::Leg { leg, source: Box::new(e) };
    Ok((a.map_err(tag('A'))?, b.map_err(tag('B'))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeVerdict {
    pub delay: f64,
    pub stable: bool,
    /// Final tracking error when the run completed.
    pub final_error: Option<f64>,
}

/// Reruns the scenario at each actuator delay. A delay is unstable when
/// the run diverges or ends with a larger tracking error than it started
/// with. Verdicts come back in input order.
pub fn stability_probe(config: &LoopConfig, scenario: &Scenario, delays: &[f64]) -> Result<Vec<ProbeVerdict>> {
    for &d in delays {
        let mut c = *config;
        c.actuator.delay = d;
        c.validate(scenario.dt)?;
    }
    let initial = (scenario.command - scenario.initial_pitch).abs();
    Ok(delays
        .par_iter()
        .map(|&delay| {
            let mut c = *config;
            c.actuator.delay = delay;
            match run_scenario(&c, scenario) {
                Ok(trace) => {
                    let last = trace.omega.last().copied().unwrap_or(f64::NAN);
                    let final_error = (scenario.command - last).abs();
                    ProbeVerdict {
                        delay,
                        stable: final_error <= initial,
                        final_error: Some(final_error),
                    }
                }
                Err(_) => ProbeVerdict {
                    delay,
                    stable: false,
                    final_error: None,
                },
            }
        })
        .collect())
}

/// Smallest probed delay that is unstable, if any.
pub fn first_unstable_delay(verdicts: &[ProbeVerdict]) -> Option<f64> {
    verdicts
        .iter()
        .filter(|v| !v.stable)
        .map(|v| v.delay)
        .min_by(f64::total_cmp)
}
