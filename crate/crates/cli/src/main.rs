use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use pitch_autopilot::aero_sizing::sizing_report;
use pitch_autopilot::config::Document;
use pitch_autopilot::metrics::{
    band_for_step, improvement, metrics_csv, noise_envelope, render_metrics, step_metrics, BandSpec, NoiseEnvelope,
    StepMetrics,
};
use pitch_autopilot::sim::{run_ab_pair, run_scenario, Trace};
use pitch_autopilot::tuner::{sweep, sweep_csv, sweep_winner, tune_pid, CostSpec, SweepSpec};
use pitch_autopilot::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

/// Pitch-autopilot simulator for a tail-controlled subsonic missile.
#[derive(Parser, Debug)]
#[command(name = "autopilot", version)]
struct Cli {
    /// JSON configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for traces and reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dotted-path override, e.g. `loop.pid.kp=50`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Disable measurement noise.
    #[arg(long, global = true)]
    no_noise: bool,
    /// Simulated time, seconds.
    #[arg(long, global = true)]
    duration: Option<f64>,
    /// Integration step, seconds.
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write its trace, metrics and plot script.
    Simulate {
        #[arg(long, value_enum, default_value_t = Format::Report)]
        format: Format,
    },
    /// Run the scenario without (A) and with (B) the lead compensator.
    Ab {
        #[arg(long, value_enum, default_value_t = Format::Report)]
        format: Format,
    },
    /// Print the wing, tail and margin sizing report.
    Size,
    /// Sweep one loop parameter and rank the runs by cost.
    Sweep {
        /// Dotted path into the loop section, e.g. `actuator.gain`.
        #[arg(long, default_value = "actuator.gain")]
        param: String,
        /// Comma-separated values or an inclusive integer range `a:b`.
        #[arg(long, default_value = "1:15")]
        values: String,
    },
    /// Tune the PID gains with a Nelder-Mead simplex.
    Tune {
        #[arg(long, default_value_t = 200)]
        max_evals: usize,
    },
    /// Recompute step metrics from an existing trace CSV.
    Metrics {
        trace: PathBuf,
        /// Initial pitch; defaults to the first pitch sample.
        #[arg(long)]
        start: Option<f64>,
        /// Commanded pitch; defaults to the first command sample.
        #[arg(long)]
        target: Option<f64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_divergence() => EXIT_DIVERGED,
        Some(Error::Config(_) | Error::Parse(_) | Error::Domain { .. } | Error::SingularSizing { .. }) => EXIT_CONFIG,
        Some(_) => 1,
        None => 1,
    }
}

fn load(cli: &Cli) -> anyhow::Result<Document> {
    let doc = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Document::from_json(&text).map_err(|e| match e {
                Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
                other => other,
            })?
        }
        None => Document::default(),
    };
    let mut doc = doc.with_overrides(&cli.overrides)?;
    if let Some(seed) = cli.seed {
        doc.scenario.seed = seed;
    }
    if let Some(d) = cli.duration {
        doc.scenario.duration = d;
    }
    if let Some(dt) = cli.dt {
        doc.scenario.dt = dt;
    }
    if cli.no_noise {
        doc.loop_config.noise.enabled = false;
    }
    Ok(doc)
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let doc = load(cli)?;
    match &cli.command {
        Command::Simulate { format } => simulate(cli, &doc, *format),
        Command::Ab { format } => ab(cli, &doc, *format),
        Command::Size => {
            let report = sizing_report(&doc.missile, &doc.derivatives, &doc.tail_sizing)?;
            print!("{}", report.render());
            Ok(())
        }
        Command::Sweep { param, values } => {
            let values = parse_values(values)?;
            let spec = SweepSpec {
                path: param.clone(),
                values,
                scenario: doc.scenario,
                base: doc.loop_config,
            };
            let rows = sweep(&spec, &CostSpec::default())?;
            let path = write(&cli.out, "sweep.csv", &sweep_csv(param, &rows))?;
            print!("{}", sweep_csv(param, &rows));
            if let Some(w) = sweep_winner(&rows) {
                println!("winner: {param} = {} (cost {:.4})", w.value, w.cost);
            }
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        Command::Tune { max_evals } => {
            let r = tune_pid(&doc.loop_config, &doc.scenario, &CostSpec::default(), *max_evals)?;
            let mut s = String::new();
            writeln!(s, "start kp={} ki={} kd={} cost={:.6}", doc.loop_config.pid.kp, doc.loop_config.pid.ki, doc.loop_config.pid.kd, r.start_cost)?;
            writeln!(s, "tuned kp={} ki={} kd={} cost={:.6}", r.gains.kp, r.gains.ki, r.gains.kd, r.cost)?;
            writeln!(s, "evaluations {}", r.history.len())?;
            print!("{s}");
            let mut hist = String::from("eval,best_cost\n");
            for (i, c) in r.history.iter().enumerate() {
                writeln!(hist, "{},{c}", i + 1)?;
            }
            write(&cli.out, "tune.txt", &s)?;
            write(&cli.out, "tune_history.csv", &hist)?;
            Ok(())
        }
        Command::Metrics { trace, start, target } => {
            let file = fs::File::open(trace).with_context(|| format!("opening {}", trace.display()))?;
            let tr = Trace::read_csv(std::io::BufReader::new(file))?;
            let start = start.unwrap_or(tr.omega[0]);
            let target = target.unwrap_or(tr.cmd[0]);
            let band = band_for_step(start, target, 0.05)?;
            let m = step_metrics(&tr, start, target, &band)?;
            print!("{}", render_metrics(&trace.display().to_string(), &m));
            Ok(())
        }
    }
}

fn parse_values(spec: &str) -> anyhow::Result<Vec<f64>> {
    let spec = spec.trim();
    let values: Vec<f64> = if let Some((a, b)) = spec.split_once(':') {
        let a: i64 = a.trim().parse().map_err(|_| Error::Parse(format!("bad range start in `{spec}`")))?;
        let b: i64 = b.trim().parse().map_err(|_| Error::Parse(format!("bad range end in `{spec}`")))?;
        (a..=b).map(|v| v as f64).collect()
    } else {
        spec.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("`{s}` is not a number"))))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(Error::Config("no sweep values given".into()).into());
    }
    Ok(values)
}

struct Analysis {
    /// `None` when the run ends before the response leaves the start.
    metrics: Option<StepMetrics>,
    envelope: Option<NoiseEnvelope>,
}

fn analyse(doc: &Document, trace: &Trace, band: &BandSpec) -> anyhow::Result<Analysis> {
    let s = &doc.scenario;
    let metrics = match step_metrics(trace, s.initial_pitch, s.command, band) {
        Ok(m) => Some(m),
        Err(Error::NoResponse) => None,
        Err(e) => return Err(e.into()),
    };
    // The envelope is a steady-state statistic over 5 s onward.
    let envelope = if doc.loop_config.noise.enabled && s.duration > 5.0 {
        Some(noise_envelope(trace, 5.0)?)
    } else {
        None
    };
    Ok(Analysis { metrics, envelope })
}

fn report_for(label: &str, a: &Analysis) -> String {
    match &a.metrics {
        Some(m) => render_metrics(label, m),
        None => format!("[{label}]\nno step response within the run\n"),
    }
}

fn table_for(rows: &[(&str, &Analysis)]) -> String {
    let with: Vec<(&str, &StepMetrics)> = rows.iter().filter_map(|(l, a)| Some((*l, a.metrics.as_ref()?))).collect();
    metrics_csv(&with)
}

fn render_envelope(label: &str, e: &NoiseEnvelope) -> String {
    format!(
        "noise envelope {label}: max {:+.3} deg, min {:+.3} deg, peak-to-peak {:.3} deg, variance {:.5} deg²\n",
        e.max,
        e.min,
        e.peak_to_peak(),
        e.variance
    )
}

fn simulate(cli: &Cli, doc: &Document, format: Format) -> anyhow::Result<()> {
    let s = &doc.scenario;
    let trace = run_scenario(&doc.loop_config, s)?;
    let band = band_for_step(s.initial_pitch, s.command, 0.05)?;
    let a = analyse(doc, &trace, &band)?;
    let label = if doc.loop_config.compensator.enabled { "B" } else { "A" };

    let trace_path = write(&cli.out, "trace.csv", &trace.to_csv_string())?;
    let mut report = report_for(label, &a);
    if let Some(e) = &a.envelope {
        report.push_str(&render_envelope(label, e));
    }
    let table = table_for(&[(label, &a)]);
    write(&cli.out, "metrics.txt", &report)?;
    write(&cli.out, "metrics.csv", &table)?;
    write(&cli.out, "plot_trace.py", &plot_script(&["trace.csv"], &band))?;
    match format {
        Format::Report => print!("{report}"),
        Format::Csv => print!("{table}"),
    }
    eprintln!("wrote {}", trace_path.display());
    Ok(())
}

fn ab(cli: &Cli, doc: &Document, format: Format) -> anyhow::Result<()> {
    let s = &doc.scenario;
    let (ta, tb) = run_ab_pair(&doc.loop_config, s)?;
    let band = band_for_step(s.initial_pitch, s.command, 0.05)?;
    let a = analyse(doc, &ta, &band)?;
    let b = analyse(doc, &tb, &band)?;

    write(&cli.out, "trace_A.csv", &ta.to_csv_string())?;
    write(&cli.out, "trace_B.csv", &tb.to_csv_string())?;
    write(&cli.out, "plot_ab.py", &plot_script(&["trace_A.csv", "trace_B.csv"], &band))?;
    let table = table_for(&[("A", &a), ("B", &b)]);
    write(&cli.out, "metrics.csv", &table)?;

    let mut report = report_for("A", &a);
    report.push_str(&report_for("B", &b));
    if let (Some(ma), Some(mb)) = (&a.metrics, &b.metrics) {
        report.push_str("[B over A]\n");
        let pct = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (Some(x), Some(y)) => format!("{:.1}%", improvement(x, y)),
            _ => "n/a".to_string(),
        };
        writeln!(report, "rise time improvement      {}", pct(ma.rise_time, mb.rise_time))?;
        writeln!(report, "peak time improvement      {}", pct(Some(ma.peak_time), Some(mb.peak_time)))?;
        writeln!(report, "settling time improvement  {}", pct(ma.settling_time, mb.settling_time))?;
        writeln!(
            report,
            "overshoot improvement      {}",
            pct(Some(ma.peak_overshoot), Some(mb.peak_overshoot))
        )?;
    }
    if let (Some(ea), Some(eb)) = (&a.envelope, &b.envelope) {
        report.push_str(&render_envelope("A", ea));
        report.push_str(&render_envelope("B", eb));
        let verdict = if eb.peak_to_peak() > ea.peak_to_peak() {
            "B exceeds A"
        } else {
            "B does not exceed A"
        };
        writeln!(report, "noise amplification: {verdict}")?;
    }
    write(&cli.out, "ab_report.txt", &report)?;
    match format {
        Format::Report => print!("{report}"),
        Format::Csv => print!("{table}"),
    }
    Ok(())
}

/// Matplotlib script overlaying the pitch traces on the tolerance band.
fn plot_script(traces: &[&str], band: &BandSpec) -> String {
    let files = traces.iter().map(|t| format!("\"{t}\"")).collect::<Vec<_>>().join(", ");
    format!(
        r#"# Plots the pitch traces next to this script with the settling band.
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
TRACES = [{files}]
UPPER, LOWER = {upper:?}, {lower:?}


def load(name):
    with open(os.path.join(HERE, name), newline="") as f:
        rows = list(csv.DictReader(f))
    return {{k: [float(r[k]) for r in rows] for k in rows[0]}}


fig, ax = plt.subplots(figsize=(9, 5))
for name in TRACES:
    tr = load(name)
    label = os.path.splitext(name)[0]
    ax.plot(tr["t"], tr["omega_meas"], lw=0.5, alpha=0.4, label=label + " measured")
    ax.plot(tr["t"], tr["omega"], lw=1.5, label=label + " pitch")
ax.axhline(UPPER, color="k", ls="--", lw=0.8, label="Upper 1")
ax.axhline(LOWER, color="k", ls=":", lw=0.8, label="Lower 2")
ax.set_xlabel("time (s)")
ax.set_ylabel("pitch (deg)")
ax.legend()
ax.grid(True, alpha=0.3)
fig.tight_layout()
fig.savefig(os.path.join(HERE, "pitch.png"), dpi=150)
plt.show()
"#,
        upper = band.upper(),
        lower = band.lower(),
    )
}
