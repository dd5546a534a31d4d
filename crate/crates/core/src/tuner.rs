//! Parameter sweeps and derivative-free PID tuning.

use rayon::prelude::*;
use serde::Serialize;

use crate::blocks::PidGains;
use crate::config::{from_value, get_path, set_path};
use crate::error::{Error, Result};
use crate::metrics::{band_for_step, step_metrics, StepMetrics};
use crate::sim::{run_scenario, LoopConfig, Scenario};

/// Weights of the step-response cost
/// `w_s·t_s + w_m·M_p + w_r·t_r + w_iae·IAE`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostSpec {
    pub settling: f64,
    pub overshoot: f64,
    pub rise: f64,
    pub iae: f64,
    /// Cost assigned to runs that diverge or never respond.
    pub divergence_penalty: f64,
}

impl Default for CostSpec {
    fn default() -> Self {
        Self {
            settling: 1.0,
            overshoot: 0.5,
            rise: 0.2,
            iae: 0.01,
            divergence_penalty: 1e6,
        }
    }
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        let w = [self.settling, self.overshoot, self.rise, self.iae];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config("cost weights must be finite and >= 0"));
        }
        if !(self.divergence_penalty.is_finite() && self.divergence_penalty > 0.0) {
            return Err(Error::config("divergence penalty must be a positive finite number"));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        [self.settling, self.overshoot, self.rise, self.iae].iter().all(|&w| w == 0.0)
    }

    /// Cost of a metrics record. Times that never occur count as the whole
    /// run duration.
    pub fn of(&self, m: &StepMetrics, duration: f64) -> f64 {
        self.settling * m.settling_time.unwrap_or(duration)
            + self.overshoot * m.peak_overshoot
            + self.rise * m.rise_time.unwrap_or(duration)
            + self.iae * m.iae
    }
}

/// Runs `config` noise-free and scores it. Failed runs carry the penalty.
pub fn evaluate(config: &LoopConfig, scenario: &Scenario, cost: &CostSpec) -> (Option<StepMetrics>, f64) {
    let mut c = *config;
    c.noise.enabled = false;
    let metrics = band_for_step(scenario.initial_pitch, scenario.command, 0.05).and_then(|band| {
        let trace = run_scenario(&c, scenario)?;
        step_metrics(&trace, scenario.initial_pitch, scenario.command, &band)
    });
    match metrics {
        Ok(m) => {
            let v = cost.of(&m, scenario.duration);
            (Some(m), if v.is_finite() { v } else { cost.divergence_penalty })
        }
        Err(_) => (None, cost.divergence_penalty),
    }
}

/// Copy of `config` with the numeric field at dotted `path` set to `value`.
pub fn with_parameter(config: &LoopConfig, path: &str, value: f64) -> Result<LoopConfig> {
    let mut tree = serde_json::to_value(config).map_err(|e| Error::Parse(e.to_string()))?;
    match get_path(&tree, path) {
        Some(v) if v.is_number() || v.is_null() => {}
        Some(_) => return Err(Error::config(format!("`{path}` is not a numeric parameter"))),
        None => return Err(Error::config(format!("unknown parameter `{path}`"))),
    }
    set_path(&mut tree, path, serde_json::json!(value))?;
    from_value(tree).map_err(|e| Error::config(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Dotted path into the loop configuration, e.g. `actuator.gain`.
    pub path: String,
    pub values: Vec<f64>,
    pub scenario: Scenario,
    pub base: LoopConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: Option<StepMetrics>,
    pub cost: f64,
}

/// One noise-free run per value, in parallel. Rows come back ordered by
/// value.
pub fn sweep(spec: &SweepSpec, cost: &CostSpec) -> Result<Vec<SweepRow>> {
    cost.validate()?;
    if spec.values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    let configs = spec
        .values
        .iter()
        .map(|&v| with_parameter(&spec.base, &spec.path, v).map(|c| (v, c)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<SweepRow> = configs
        .par_iter()
        .map(|(value, c)| {
            let (metrics, cost) = evaluate(c, &spec.scenario, cost);
            SweepRow {
                value: *value,
                metrics,
                cost,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(rows)
}

/// Lowest-cost row; ties go to the smaller value.
pub fn sweep_winner(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter().min_by(|a, b| a.cost.total_cmp(&b.cost))
}

pub fn sweep_csv(path: &str, rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut s = format!("{path},rise_time,peak_time,settling_time,peak_overshoot,iae,cost\n");
    for r in rows {
        let m = r.metrics.as_ref();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.value,
            opt(m.and_then(|m| m.rise_time)),
            opt(m.map(|m| m.peak_time)),
            opt(m.and_then(|m| m.settling_time)),
            opt(m.map(|m| m.peak_overshoot)),
            opt(m.map(|m| m.iae)),
            r.cost
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    /// Best cost seen after each evaluation; non-increasing.
    pub history: Vec<f64>,
}

/// Nelder–Mead simplex minimisation with the standard coefficients.
///
/// The simplex starts at `x0` plus one vertex per coordinate offset by
/// `step[i]`. Stops after `max_evals` evaluations or when the spread of
/// vertex costs drops below `tol`.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    max_evals: usize,
    tol: f64,
) -> Minimum {
    let n = x0.len();
    let mut evals = 0;
    let mut history = Vec::new();
    let mut best = (x0.to_vec(), f64::INFINITY);
    let mut eval = |x: &[f64], evals: &mut usize, history: &mut Vec<f64>, best: &mut (Vec<f64>, f64)| {
        let v = f(x);
        *evals += 1;
        if v < best.1 {
            *best = (x.to_vec(), v);
        }
        history.push(best.1);
        v
    };

    let f0 = eval(x0, &mut evals, &mut history, &mut best);
    let mut simplex = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        if evals >= max_evals {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += step[i];
        let v = eval(&x, &mut evals, &mut history, &mut best);
        simplex.push((x, v));
    }

    while evals < max_evals && simplex.len() == n + 1 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() <= tol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |c: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(m, w)| m + c * (m - w))
                .collect()
        };
        let xr = toward(1.0);
        let fr = eval(&xr, &mut evals, &mut history, &mut best);
        if fr < simplex[0].1 {
            if evals >= max_evals {
                simplex[n] = (xr, fr);
                break;
            }
            let xe = toward(2.0);
            let fe = eval(&xe, &mut evals, &mut history, &mut best);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            if evals >= max_evals {
                break;
            }
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = toward(0.5);
                let fc = eval(&xc, &mut evals, &mut history, &mut best);
                (xc, fc)
            } else {
                let xc = toward(-0.5);
                let fc = eval(&xc, &mut evals, &mut history, &mut best);
                (xc, fc)
            };
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (xc, fc);
            } else {
                // Shrink toward the best vertex.
                let x_best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    if evals >= max_evals {
                        break;
                    }
                    let x: Vec<f64> = x_best.iter().zip(&v.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    let fx = eval(&x, &mut evals, &mut history, &mut best);
                    *v = (x, fx);
                }
            }
        }
    }

    Minimum {
        x: best.0,
        fx: best.1,
        evals,
        history,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub gains: PidGains,
    pub start_cost: f64,
    pub cost: f64,
    pub history: Vec<f64>,
}

/// Nelder–Mead over (k_P, k_I, k_D) from the configured gains, scored on
/// noise-free runs. Never returns gains worse than the start.
pub fn tune_pid(config: &LoopConfig, scenario: &Scenario, cost: &CostSpec, max_evals: usize) -> Result<TuneResult> {
    cost.validate()?;
    if max_evals == 0 {
        return Err(Error::config("max-evals must be at least 1"));
    }
    let start = config.pid;
    if cost.is_zero() {
        return Ok(TuneResult {
            gains: start,
            start_cost: 0.0,
            cost: 0.0,
            history: vec![0.0],
        });
    }
    let objective = |x: &[f64]| {
        let mut c = *config;
        c.pid.kp = x[0];
        c.pid.ki = x[1];
        c.pid.kd = x[2];
        evaluate(&c, scenario, cost).1
    };
    let x0 = [start.kp, start.ki, start.kd];
    let step: Vec<f64> = x0.iter().map(|&g| if g != 0.0 { 0.1 * g } else { 1.0 }).collect();

    let mut vertex_costs = Vec::new();
    let result = nelder_mead(
        |x| {
            let v = objective(x);
            vertex_costs.push(v);
            v
        },
        &x0,
        &step,
        max_evals,
        1e-9,
    );
    let simplex_done = vertex_costs.len() > x0.len();
    if simplex_done && vertex_costs[..=x0.len()].iter().all(|&v| v >= cost.divergence_penalty) {
        return Err(Error::UntunableStart);
    }
    let start_cost = vertex_costs[0];
    let gains = PidGains {
        kp: result.x[0],
        ki: result.x[1],
        kd: result.x[2],
        ..start
    };
    Ok(TuneResult {
        gains,
        start_cost,
        cost: result.fx,
        history: result.history,
    })
}
