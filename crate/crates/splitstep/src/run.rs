//! Executes a scenario and writes its data files.
//!
//! A run directory holds:
//!
//! * `energies.csv` — `index,energy,residual,steps`, one row per level;
//! * `probe_energies.csv` — same columns, only with `eigen.probe_alpha`;
//! * `series.csv` — `tau,norm,energy,mean_<axis>…,spread_<axis>…,p_<region>…`
//!   every `output.series_every` steps plus the final state; region
//!   probabilities are fractions of the current norm;
//! * `snapshots.jsonl` — one object per snapshot: `tau`, `energy`, `norm`,
//!   `grid` (`shape`, `spacing`, `lower`, `periodic`), `density`, and `re`/`im`
//!   when `output.amplitudes` is set.
//!
//! Every float is written as `{:.16e}` (17 significant digits) and every
//! file is written to a temporary name and renamed into place. Output is a
//! pure function of the scenario, so reruns are byte-identical.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use splitstep_core::propagator::{evolve_with, EvolvePlan, Hamiltonian, PropagatorError};
use splitstep_core::{
    probability_in_region, spectrum, EigenError, EigenResult, Grid, ObservableError, Snapshot, Wavefunction,
    WavefunctionError,
};
use thiserror::Error;

use crate::config::{InitSpec, Scenario, SetupError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("setup: {0}")]
    Setup(#[from] SetupError),
    #[error("eigensolve: {0}")]
    Eigen(#[source] EigenError),
    #[error("probe eigensolve at alpha = {alpha}: {source}")]
    Probe {
        alpha: f64,
        #[source]
        source: EigenError,
    },
    #[error("initial state: {0}")]
    Initial(String),
    #[error("evolution: {0}")]
    Evolve(#[source] PropagatorError),
    #[error("observables: {0}")]
    Observe(#[source] ObservableError),
    #[error("writing {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<WavefunctionError> for RunError {
    fn from(e: WavefunctionError) -> Self {
        RunError::Initial(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub residual: f64,
    pub steps: usize,
}

/// Tunnelling time scales of a double-well spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    /// `π / (E1 − E0)`: time to move from one well to the other.
    pub half_beat: f64,
    /// `2π / (mean(E2, E3) − mean(E0, E1))`, when four levels are known.
    pub transition: Option<f64>,
}

impl Timing {
    pub fn from_levels(e: &[f64]) -> Option<Timing> {
        if e.len() < 2 || e[1] == e[0] {
            return None;
        }
        let transition = (e.len() >= 4).then(|| 2.0 * PI / (0.5 * (e[2] + e[3]) - 0.5 * (e[0] + e[1])));
        Some(Timing {
            half_beat: PI / (e[1] - e[0]),
            transition,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSummary {
    pub tau: f64,
    pub energy: f64,
    pub norm: f64,
    pub mean: Vec<f64>,
    pub spread: Vec<f64>,
    pub regions: Vec<(String, f64)>,
}

impl StateSummary {
    pub fn region(&self, name: &str) -> Option<f64> {
        self.regions.iter().find(|(n, _)| n == name).map(|(_, p)| *p)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub out_dir: Option<PathBuf>,
    pub levels: Vec<Level>,
    pub timing: Option<Timing>,
    pub probe_alpha: Option<f64>,
    pub probe_levels: Vec<Level>,
    pub probe_timing: Option<Timing>,
    pub initial: Option<StateSummary>,
    pub final_state: Option<StateSummary>,
    pub snapshots: usize,
    pub steps: usize,
    /// α(τ) as configured.
    pub alpha_schedule: String,
    pub wall_clock: Duration,
}

impl RunReport {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn probe_energies(&self) -> Vec<f64> {
        self.probe_levels.iter().map(|l| l.energy).collect()
    }

    pub fn initial_energy(&self) -> Option<f64> {
        self.initial.as_ref().map(|s| s.energy)
    }

    pub fn final_energy(&self) -> Option<f64> {
        self.final_state.as_ref().map(|s| s.energy)
    }
}

/// Eigenpairs and data written by a run, kept for callers that need states.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub eigenpairs: Vec<EigenResult>,
    pub final_wavefunction: Option<Wavefunction>,
}

fn levels(results: &[EigenResult]) -> Vec<Level> {
    results
        .iter()
        .map(|r| Level {
            energy: r.energy,
            residual: r.residual,
            steps: r.steps_taken,
        })
        .collect()
}

/// Gaussian packet `(2πσ²)^{-d/4} e^{-|β-β0|²/4σ²} e^{ik0·β}`, renormalized on the grid.
pub fn gaussian_packet(grid: &Arc<Grid>, beta0: &[f64], sigma0: f64, k0: &[f64]) -> Result<Wavefunction, WavefunctionError> {
    let dims = grid.dims();
    let amp = (2.0 * PI * sigma0 * sigma0).powf(-(dims as f64) / 4.0);
    let psi = Wavefunction::from_fn(grid.clone(), |p| {
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for d in 0..dims {
            r2 += (p[d] - beta0[d]).powi(2);
            phase += k0[d] * p[d];
        }
        Complex64::from_polar(amp * (-r2 / (4.0 * sigma0 * sigma0)).exp(), phase)
    });
    Ok(psi.normalize()?.0)
}

fn initial_state(s: &Scenario, grid: &Arc<Grid>, eigen: &[EigenResult]) -> Result<Wavefunction, RunError> {
    match s.init.as_ref().ok_or_else(|| RunError::Initial("no [init] section".into()))? {
        InitSpec::Eigen { index } => eigen
            .get(*index)
            .map(|r| r.state.clone())
            .ok_or_else(|| RunError::Initial(format!("level {index} was not solved"))),
        InitSpec::Gaussian { beta0, sigma0, k0 } => Ok(gaussian_packet(grid, beta0, *sigma0, k0)?),
        InitSpec::Superposition { states, weights } => {
            let mut psi = Wavefunction::zeros(grid.clone());
            for (i, w) in states.iter().zip(weights) {
                let r = eigen
                    .get(*i)
                    .ok_or_else(|| RunError::Initial(format!("level {i} was not solved")))?;
                psi.add_scaled(Complex64::new(*w, 0.0), &r.state)?;
            }
            Ok(psi.normalize()?.0)
        }
    }
}

fn summarize(s: &Scenario, psi: &Wavefunction, h: &Hamiltonian, tau: f64) -> Result<(Snapshot, StateSummary), RunError> {
    let snap = Snapshot::capture(psi, h, tau, false).map_err(RunError::Observe)?;
    let n2 = psi.norm_squared();
    let regions = s
        .regions
        .iter()
        .map(|r| Ok((r.name.clone(), probability_in_region(psi, &r.bounds)? / n2)))
        .collect::<Result<Vec<_>, ObservableError>>()
        .map_err(RunError::Observe)?;
    let summary = StateSummary {
        tau,
        energy: snap.energy,
        norm: snap.norm,
        mean: snap.mean_position.clone(),
        spread: snap.spread.clone(),
        regions,
    };
    Ok((snap, summary))
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn series_header(s: &Scenario) -> String {
    let mut h = String::from("tau,norm,energy");
    for a in &AXES[..s.grid.dims] {
        let _ = write!(h, ",mean_{a}");
    }
    for a in &AXES[..s.grid.dims] {
        let _ = write!(h, ",spread_{a}");
    }
    for r in &s.regions {
        let _ = write!(h, ",p_{}", r.name);
    }
    h.push('\n');
    h
}

fn series_row(out: &mut String, st: &StateSummary) {
    let _ = write!(out, "{:.16e},{:.16e},{:.16e}", st.tau, st.norm, st.energy);
    for v in st.mean.iter().chain(&st.spread) {
        let _ = write!(out, ",{v:.16e}");
    }
    for (_, p) in &st.regions {
        let _ = write!(out, ",{p:.16e}");
    }
    out.push('\n');
}

fn energies_csv(levels: &[Level]) -> String {
    let mut out = String::from("index,energy,residual,steps\n");
    for (i, l) in levels.iter().enumerate() {
        let _ = writeln!(out, "{i},{:.16e},{:.16e},{}", l.energy, l.residual, l.steps);
    }
    out
}

fn json_array(out: &mut String, values: impl Iterator<Item = f64>) {
    out.push('[');
    for (i, v) in values.enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out.push(']');
}

fn snapshot_json(grid: &Grid, snap: &Snapshot) -> String {
    let mut o = String::new();
    let _ = write!(o, "{{\"tau\":{:.16e},\"energy\":{:.16e},\"norm\":{:.16e},", snap.tau, snap.energy, snap.norm);
    let shape: Vec<String> = grid.shape().iter().map(|n| n.to_string()).collect();
    let _ = write!(o, "\"grid\":{{\"shape\":[{}],\"spacing\":", shape.join(","));
    json_array(&mut o, grid.axes().iter().map(|a| a.spacing()));
    o.push_str(",\"lower\":");
    json_array(&mut o, grid.axes().iter().map(|a| a.lower_edge()));
    let periodic: Vec<&str> = grid
        .axes()
        .iter()
        .map(|a| if a.is_periodic() { "true" } else { "false" })
        .collect();
    let _ = write!(o, ",\"periodic\":[{}]}},\"density\":", periodic.join(","));
    json_array(&mut o, snap.density.iter().copied());
    if let Some(amps) = &snap.amplitudes {
        o.push_str(",\"re\":");
        json_array(&mut o, amps.iter().map(|c| c.re));
        o.push_str(",\"im\":");
        json_array(&mut o, amps.iter().map(|c| c.im));
    }
    o.push_str("}\n");
    o
}

/// Write-then-rename so readers never see a partial file.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let io = |source| RunError::Output {
        path: path.clone(),
        source,
    };
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, &path).map_err(io)
}

fn solve(h: &Hamiltonian, s: &Scenario) -> Result<Vec<EigenResult>, EigenError> {
    let (Some(spec), Some(opts)) = (&s.eigen, s.eigen_options()) else {
        return Ok(Vec::new());
    };
    spectrum(h, spec.count, &opts)
}

/// Runs `s`, writing data files into `out_dir` when given.
pub fn run(s: &Scenario, out_dir: Option<&Path>) -> Result<RunReport, RunError> {
    Ok(run_full(s, out_dir)?.report)
}

pub fn run_full(s: &Scenario, out_dir: Option<&Path>) -> Result<RunArtifacts, RunError> {
    let started = Instant::now();
    s.validate().map_err(SetupError::from)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| RunError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let grid = s.build_grid()?;
    let h = s.hamiltonian(&grid)?;

    let eigenpairs = solve(&h, s).map_err(RunError::Eigen)?;
    let lv = levels(&eigenpairs);
    if let (Some(dir), true) = (out_dir, s.eigen.is_some()) {
        write_atomic(dir, "energies.csv", &energies_csv(&lv))?;
    }

    let probe_alpha = s.eigen.as_ref().and_then(|e| e.probe_alpha);
    let mut probe_levels = Vec::new();
    if let Some(alpha) = probe_alpha {
        let hp = s.hamiltonian_at_alpha(&grid, alpha)?;
        let r = solve(&hp, s).map_err(|source| RunError::Probe { alpha, source })?;
        probe_levels = levels(&r);
        if let Some(dir) = out_dir {
            write_atomic(dir, "probe_energies.csv", &energies_csv(&probe_levels))?;
        }
    }

    let mut report = RunReport {
        scenario: s.name.clone(),
        out_dir: out_dir.map(Path::to_path_buf),
        timing: Timing::from_levels(&lv.iter().map(|l| l.energy).collect::<Vec<_>>()),
        levels: lv,
        probe_alpha,
        probe_timing: Timing::from_levels(&probe_levels.iter().map(|l| l.energy).collect::<Vec<_>>()),
        probe_levels,
        initial: None,
        final_state: None,
        snapshots: 0,
        steps: 0,
        alpha_schedule: s.alpha.clone(),
        wall_clock: Duration::ZERO,
    };

    let mut final_wavefunction = None;
    if let (Some(ev), Some(cfg)) = (&s.evolve, s.step_config()) {
        let psi0 = initial_state(s, &grid, &eigenpairs)?;
        let mut plan = EvolvePlan::new(ev.t_start, ev.t_end, cfg).with_snapshots(s.snapshot_times());
        plan.record_amplitudes = s.output.amplitudes;

        let mut series = series_header(s);
        let every = s.output.series_every;
        let mut last_row = None;
        let mut observe_err = None;
        let outcome = evolve_with(&psi0, &h, &plan, |step, tau, psi| {
            if step % every == 0 {
                match summarize(s, psi, &h, tau) {
                    Ok((_, st)) => {
                        series_row(&mut series, &st);
                        last_row = Some(step);
                    }
                    Err(e) => {
                        observe_err = Some(e);
                        return Err(PropagatorError::BadPlan("observation failed"));
                    }
                }
            }
            Ok(())
        });
        if let Some(e) = observe_err {
            return Err(e);
        }
        let outcome = outcome.map_err(RunError::Evolve)?;
        let (_, initial) = summarize(s, &psi0, &h, ev.t_start)?;
        let (_, fin) = summarize(s, &outcome.final_state, &h, outcome.final_tau)?;
        if last_row != Some(outcome.steps) {
            series_row(&mut series, &fin);
        }
        if let Some(dir) = out_dir {
            write_atomic(dir, "series.csv", &series)?;
            let mut lines = String::new();
            for snap in &outcome.snapshots {
                lines.push_str(&snapshot_json(&grid, snap));
            }
            write_atomic(dir, "snapshots.jsonl", &lines)?;
        }
        report.initial = Some(initial);
        report.final_state = Some(fin);
        report.snapshots = outcome.snapshots.len();
        report.steps = outcome.steps;
        final_wavefunction = Some(outcome.final_state);
    }
    report.wall_clock = started.elapsed();
    Ok(RunArtifacts {
        report,
        eigenpairs,
        final_wavefunction,
    })
}

fn fmt_levels(f: &mut fmt::Formatter<'_>, label: &str, levels: &[Level]) -> fmt::Result {
    if levels.is_empty() {
        return Ok(());
    }
    writeln!(f, "{label}:")?;
    for (i, l) in levels.iter().enumerate() {
        writeln!(f, "  E{i:<3} {:>14.8}   residual {:.2e}   steps {}", l.energy, l.residual, l.steps)?;
    }
    Ok(())
}

fn fmt_timing(f: &mut fmt::Formatter<'_>, t: &Option<Timing>) -> fmt::Result {
    if let Some(t) = t {
        write!(f, "  half beat pi/(E1-E0) = {:.4}", t.half_beat)?;
        if let Some(tr) = t.transition {
            write!(f, "   transition 2pi/dE10 = {tr:.4}")?;
        }
        writeln!(f)?;
    }
    Ok(())
}

fn fmt_state(f: &mut fmt::Formatter<'_>, label: &str, s: &Option<StateSummary>) -> fmt::Result {
    if let Some(s) = s {
        write!(f, "{label} (tau = {:.4}): energy {:.6}, norm {:.10}, mean {:?}, spread {:?}", s.tau, s.energy, s.norm, s.mean, s.spread)?;
        for (n, p) in &s.regions {
            write!(f, ", p_{n} {p:.6}")?;
        }
        writeln!(f)?;
    }
    Ok(())
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", self.scenario)?;
        writeln!(f, "alpha(t) = {}", self.alpha_schedule)?;
        fmt_levels(f, "spectrum", &self.levels)?;
        fmt_timing(f, &self.timing)?;
        if let Some(a) = self.probe_alpha {
            fmt_levels(f, &format!("spectrum at alpha = {a}"), &self.probe_levels)?;
            fmt_timing(f, &self.probe_timing)?;
        }
        fmt_state(f, "initial", &self.initial)?;
        fmt_state(f, "final", &self.final_state)?;
        if self.steps > 0 || self.final_state.is_some() {
            writeln!(f, "steps {}, snapshots {}", self.steps, self.snapshots)?;
        }
        if let Some(dir) = &self.out_dir {
            writeln!(f, "output {}", dir.display())?;
        }
        write!(f, "wall clock {:.2?}", self.wall_clock)
    }
}
