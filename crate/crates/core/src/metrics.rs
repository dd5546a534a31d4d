//! Step-response measurements, requirement verdicts and noise statistics.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::Trace;

/// Rise-time requirement, seconds.
pub const RISE_TIME_LIMIT: f64 = 0.350;
/// Percent-overshoot requirement.
pub const OVERSHOOT_LIMIT: f64 = 20.0;
/// Steady-state accuracy requirement as a fraction of the step.
pub const ACCURACY_LIMIT: f64 = 0.05;

/// Tolerance band `target ± half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandSpec {
    pub target: f64,
    pub half_width: f64,
}

impl BandSpec {
    pub fn new(target: f64, half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::config(format!("band half-width must be > 0, got {half_width}")));
        }
        Ok(Self { target, half_width })
    }

    pub fn upper(&self) -> f64 {
        self.target + self.half_width
    }

    pub fn lower(&self) -> f64 {
        self.target - self.half_width
    }

    pub fn contains(&self, y: f64) -> bool {
        (y - self.target).abs() <= self.half_width
    }
}

/// Band of `fraction` of the step magnitude around the target.
pub fn band_for_step(start: f64, target: f64, fraction: f64) -> Result<BandSpec> {
    if !(fraction.is_finite() && fraction > 0.0) {
        return Err(Error::config(format!("band fraction must be > 0, got {fraction}")));
    }
    if start == target {
        return Err(Error::DegenerateStep(start));
    }
    BandSpec::new(target, fraction * (start - target).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DevaudVerdicts {
    /// t_r ≤ 350 ms.
    pub rise_time: bool,
    /// %M_p ≤ 20 %.
    pub overshoot: bool,
    /// Final error ≤ 5 % of the step.
    pub accuracy: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepMetrics {
    /// Time from the start of the trace to the first arrival at the target.
    /// `None` when the response never gets there.
    pub rise_time: Option<f64>,
    /// Conventional 10 % to 90 % rise time.
    pub rise_time_10_90: Option<f64>,
    /// Time of the largest excursion toward and beyond the target.
    pub peak_time: f64,
    /// Settling time into the band; `None` when the trace ends outside it.
    pub settling_time: Option<f64>,
    /// Overshoot beyond the target, degrees, ≥ 0.
    pub peak_overshoot: f64,
    /// 100·M_p/|target|; `None` for a zero target.
    pub percent_overshoot: Option<f64>,
    /// 100·M_p/|step|.
    pub percent_overshoot_of_step: f64,
    /// |y_end − target| as a fraction of the step.
    pub final_error_fraction: f64,
    /// ∫|target − y| dt.
    pub iae: f64,
    pub verdicts: DevaudVerdicts,
}

impl StepMetrics {
    /// Overshoot percentage used for the requirement check: relative to the
    /// target when it is non-zero, otherwise to the step.
    pub fn overshoot_for_verdict(&self) -> f64 {
        self.percent_overshoot.unwrap_or(self.percent_overshoot_of_step)
    }
}

/// Step metrics of the true pitch in `trace`.
pub fn step_metrics(trace: &Trace, start: f64, target: f64, band: &BandSpec) -> Result<StepMetrics> {
    step_metrics_of(&trace.t, &trace.omega, start, target, band)
}

/// Step metrics of an arbitrary sampled response `y(t)`.
pub fn step_metrics_of(t: &[f64], y: &[f64], start: f64, target: f64, band: &BandSpec) -> Result<StepMetrics> {
    if t.is_empty() || t.len() != y.len() {
        return Err(Error::config("step metrics need equally long, non-empty time and value series"));
    }
    if start == target {
        return Err(Error::DegenerateStep(start));
    }
    let step = target - start;
    let t0 = t[0];
    let progress = |v: f64| (v - start) / step;
    let first_at = |level: f64| y.iter().position(|&v| progress(v) >= level);
    let interp = |level: f64| -> Option<f64> {
        let i = first_at(level)?;
        if i == 0 {
            return Some(t[0]);
        }
        let (p0, p1) = (progress(y[i - 1]), progress(y[i]));
        Some(t[i - 1] + (t[i] - t[i - 1]) * (level - p0) / (p1 - p0))
    };

    let t10 = interp(0.1).ok_or(Error::NoResponse)?;
    let rise_time = first_at(1.0).map(|i| t[i] - t0);
    let rise_time_10_90 = interp(0.9).map(|t90| t90 - t10);

    let (peak_idx, peak_progress) = y
        .iter()
        .map(|&v| progress(v))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p > best.1 { (i, p) } else { best });
    let peak_overshoot = if peak_progress > 1.0 {
        (peak_progress - 1.0) * step.abs()
    } else {
        0.0
    };

    let settling_time = match y.iter().rposition(|&v| !band.contains(v)) {
        None => Some(0.0),
        Some(i) if i + 1 < y.len() => Some(t[i + 1] - t0),
        Some(_) => None,
    };

    let iae = t
        .windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| 0.5 * ((target - yw[0]).abs() + (target - yw[1]).abs()) * (tw[1] - tw[0]))
        .sum();

    let final_error_fraction = (y[y.len() - 1] - target).abs() / step.abs();
    let percent_overshoot = (target != 0.0).then(|| 100.0 * peak_overshoot / target.abs());
    let percent_overshoot_of_step = 100.0 * peak_overshoot / step.abs();
    let mut m = StepMetrics {
        rise_time,
        rise_time_10_90,
        peak_time: t[peak_idx] - t0,
        settling_time,
        peak_overshoot,
        percent_overshoot,
        percent_overshoot_of_step,
        final_error_fraction,
        iae,
        verdicts: DevaudVerdicts {
            rise_time: false,
            overshoot: false,
            accuracy: false,
        },
    };
    m.verdicts = DevaudVerdicts {
        rise_time: rise_time.is_some_and(|r| r <= RISE_TIME_LIMIT),
        overshoot: m.overshoot_for_verdict() <= OVERSHOOT_LIMIT,
        accuracy: final_error_fraction <= ACCURACY_LIMIT,
    };
    Ok(m)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Three-line pass/fail rendering of the tail-controlled missile
/// requirements.
pub fn devaud_report(m: &StepMetrics) -> String {
    let rise = m.rise_time.map_or("none".to_string(), |r| format!("{:.0} ms", r * 1e3));
    format!(
        "(1) rise time {rise} <= 350 ms: {}\n(2) overshoot {:.1}% <= 10-20%: {}\n(3) steady-state error {:.2}% <= 5%: {}\n",
        verdict(m.verdicts.rise_time),
        m.overshoot_for_verdict(),
        verdict(m.verdicts.overshoot),
        100.0 * m.final_error_fraction,
        verdict(m.verdicts.accuracy),
    )
}

/// Human-readable metrics block.
pub fn render_metrics(label: &str, m: &StepMetrics) -> String {
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{:.0} ms", x * 1e3));
    let mut s = String::new();
    let _ = writeln!(s, "[{label}]");
    let _ = writeln!(s, "rise time      {}", opt(m.rise_time));
    let _ = writeln!(s, "rise 10-90%    {}", opt(m.rise_time_10_90));
    let _ = writeln!(s, "peak time      {:.0} ms", m.peak_time * 1e3);
    let _ = writeln!(s, "settling time  {}", opt(m.settling_time));
    let _ = writeln!(s, "overshoot      {:.3} deg", m.peak_overshoot);
    match m.percent_overshoot {
        Some(p) => {
            let _ = writeln!(s, "overshoot %    {p:.1}% of target, {:.1}% of step", m.percent_overshoot_of_step);
        }
        None => {
            let _ = writeln!(s, "overshoot %    {:.1}% of step", m.percent_overshoot_of_step);
        }
    }
    let _ = writeln!(s, "IAE            {:.4} deg.s", m.iae);
    s.push_str(&devaud_report(m));
    s
}

/// Metrics as one CSV header plus one row per labelled entry.
pub fn metrics_csv(rows: &[(&str, &StepMetrics)]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut s = String::from(
        "label,rise_time,rise_time_10_90,peak_time,settling_time,peak_overshoot,percent_overshoot,percent_overshoot_of_step,final_error_fraction,iae,req1,req2,req3\n",
    );
    for (label, m) in rows {
        let _ = writeln!(
            s,
            "{label},{},{},{},{},{},{},{},{},{},{},{},{}",
            opt(m.rise_time),
            opt(m.rise_time_10_90),
            m.peak_time,
            opt(m.settling_time),
            m.peak_overshoot,
            opt(m.percent_overshoot),
            m.percent_overshoot_of_step,
            m.final_error_fraction,
            m.iae,
            verdict(m.verdicts.rise_time),
            verdict(m.verdicts.overshoot),
            verdict(m.verdicts.accuracy),
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseEnvelope {
    pub max: f64,
    pub min: f64,
    pub variance: f64,
}

impl NoiseEnvelope {
    pub fn peak_to_peak(&self) -> f64 {
        self.max - self.min
    }
}

/// Extremes and variance of the tracking error cmd − ω over
/// `[window_start, end]`.
///
/// The true pitch is used rather than the filtered one so that the figure
/// describes what the airframe actually does.
pub fn noise_envelope(trace: &Trace, window_start: f64) -> Result<NoiseEnvelope> {
    let end = trace.t.last().copied().ok_or_else(|| Error::config("empty trace"))?;
    if window_start >= end {
        return Err(Error::config(format!(
            "noise window start {window_start} s is not before the trace end {end} s"
        )));
    }
    let i = trace.index_at(window_start);
    let e: Vec<f64> = trace.cmd[i..].iter().zip(&trace.omega[i..]).map(|(c, w)| c - w).collect();
    let n = e.len() as f64;
    let mean = e.iter().sum::<f64>() / n;
    let variance = e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(NoiseEnvelope {
        max: e.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min: e.iter().copied().fold(f64::INFINITY, f64::min),
        variance,
    })
}

/// Percent improvement of `b` over `a` (positive when `b` is smaller).
pub fn improvement(a: f64, b: f64) -> f64 {
    100.0 * (a - b) / a
}
