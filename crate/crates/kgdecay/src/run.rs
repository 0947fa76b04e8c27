//! Run configuration and orchestration: single solves and mass sweeps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decay::{crossover_time, decay_report, spread_ratio, DecayReport, DecayWindows, SupMonitor};
use crate::diagnostics::energy::flat_energy;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::par::Execution;
use crate::propagator::Mass;
use crate::system::data::DataSpec;
use crate::system::history::{Frame, FrameSink};
use crate::system::params::{Preset, SystemParams};
use crate::system::poly::Comp;
use crate::system::solver::{solve_system, SolverConfig, Stepper, T0};

/// Masses of the default sweep.
pub const DEFAULT_MASSES: [f64; 5] = [0.0, 0.03, 0.1, 0.3, 1.0];

/// Spread of `C_u` allowed across a sweep.
pub const UNIFORMITY_BOUND: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Radial,
    Box,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub mode: Mode,
    /// Outer radius (radial) or half-width (box).
    pub extent: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_max: f64,
    pub stride: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub fit_window: [f64; 2],
    pub crossover_window: [f64; 2],
    pub delta: f64,
    pub ceiling: f64,
    pub support_tol: Option<f64>,
    pub energies: bool,
    /// Field snapshots kept per run, evenly spaced over the recorded
    /// frames and including the first and last; 0 keeps none.
    pub snapshots: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        let w = DecayWindows::default();
        Self {
            fit_window: [w.fit.0, w.fit.1],
            crossover_window: [w.crossover.0, w.crossover.1],
            delta: w.delta,
            ceiling: 1e3,
            support_tol: None,
            energies: true,
            snapshots: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
    pub grid: GridSection,
    pub params: SystemParams,
    #[serde(default)]
    pub preset: Preset,
    pub data: DataSpec,
    pub time: TimeSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks every precondition that can be checked before compute. All
    /// failures come back as [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        Mass::new(self.params.m.value()).map_err(wrap)?;
        self.params.validate().map_err(wrap)?;
        self.preset.validate().map_err(wrap)?;
        self.data.validate().map_err(wrap)?;
        let grid = self.build_grid().map_err(wrap)?;
        let t = &self.time;
        if !(t.t_max.is_finite() && t.t_max > T0) {
            return Err(Error::Config(format!("t_max must exceed t0 = {T0}, got {}", t.t_max)));
        }
        if !(t.dt > 0.0 && t.stride >= t.dt) {
            return Err(Error::Config(format!("need 0 < dt <= stride, got dt = {}, stride = {}", t.dt, t.stride)));
        }
        Stepper::new(&grid, &self.params, &self.preset, t.dt, Execution::Sequential).map_err(wrap)?;
        for (name, x) in [("t_max", t.t_max - T0), ("stride", t.stride)] {
            let k = x / t.dt;
            if (k - k.round()).abs() > 1e-6 {
                return Err(Error::Config(format!("{name} span {x} is not a whole number of steps of {}", t.dt)));
            }
        }
        let d = &self.diagnostics;
        for (name, w) in [("fit_window", d.fit_window), ("crossover_window", d.crossover_window)] {
            if !(w[0] > 0.0 && w[1] > w[0]) {
                return Err(Error::Config(format!("{name} must be increasing and positive, got {w:?}")));
            }
        }
        if !(d.delta >= 0.0 && d.delta < 0.1) {
            return Err(Error::Config(format!("delta must lie in [0, 0.1), got {}", d.delta)));
        }
        if !(d.ceiling > 0.0) {
            return Err(Error::Config("ceiling must be positive".into()));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        match self.grid.mode {
            Mode::Radial => Grid::radial(self.grid.extent, self.grid.n),
            Mode::Box => Grid::cube(self.grid.extent, self.grid.n),
        }
    }

    pub fn windows(&self) -> DecayWindows {
        let d = &self.diagnostics;
        DecayWindows {
            fit: (d.fit_window[0], d.fit_window[1]),
            crossover: (d.crossover_window[0], d.crossover_window[1]),
            delta: d.delta,
        }
    }

    /// Copy with a different mass of `u`.
    pub fn with_mass(&self, m: f64) -> Result<Self> {
        let mut c = self.clone();
        c.params.m = Mass::new(m)?;
        Ok(c)
    }
}

/// `(t, 𝓔_m(u), 𝓔₁(v))` per frame.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergyRow {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

struct EnergyMonitor {
    m: Mass,
    rows: Vec<EnergyRow>,
}

impl FrameSink for EnergyMonitor {
    fn accept(&mut self, grid: &Grid, frame: &Frame) -> Result<()> {
        self.rows.push(EnergyRow {
            t: frame.t,
            u: flat_energy(grid, frame, Comp::U, self.m)?,
            v: flat_energy(grid, frame, Comp::V, Mass::ONE)?,
        });
        Ok(())
    }
}

/// Physical values of both components at one frame.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
    pub v: Vec<f64>,
    pub v_t: Vec<f64>,
}

impl Snapshot {
    /// Columns: node coordinate(s), then `u, u_t, v, v_t`.
    pub fn write_csv<W: std::io::Write>(&self, grid: &Grid, mut w: W) -> Result<()> {
        match grid {
            Grid::Radial(_) => writeln!(w, "r,u,u_t,v,v_t")?,
            Grid::Box(_) => writeln!(w, "x,y,z,u,u_t,v,v_t")?,
        }
        for i in 0..self.u.len() {
            match grid {
                Grid::Radial(_) => write!(w, "{:.16e}", grid.radius(i))?,
                Grid::Box(g) => {
                    let p = g.position(i);
                    write!(w, "{:.16e},{:.16e},{:.16e}", p[0], p[1], p[2])?
                }
            }
            writeln!(w, ",{:.16e},{:.16e},{:.16e},{:.16e}", self.u[i], self.u_t[i], self.v[i], self.v_t[i])?;
        }
        Ok(())
    }
}

struct SnapshotSink {
    keep: Vec<usize>,
    seen: usize,
    out: Vec<Snapshot>,
}

impl SnapshotSink {
    fn new(frames: usize, count: usize) -> Self {
        let mut keep: Vec<usize> = match count {
            0 => Vec::new(),
            1 => vec![frames - 1],
            c => (0..c).map(|i| (i * (frames - 1) + (c - 1) / 2) / (c - 1)).collect(),
        };
        keep.dedup();
        Self { keep, seen: 0, out: Vec::new() }
    }
}

impl FrameSink for SnapshotSink {
    fn accept(&mut self, grid: &Grid, frame: &Frame) -> Result<()> {
        if self.keep.contains(&self.seen) {
            self.out.push(Snapshot {
                t: frame.t,
                u: grid.physical(frame.u.level(0)),
                u_t: grid.physical(frame.u.level(1)),
                v: grid.physical(frame.v.level(0)),
                v_t: grid.physical(frame.v.level(1)),
            });
        }
        self.seen += 1;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunStats {
    pub steps: usize,
    pub frames: usize,
    pub t_end: f64,
    pub support_leak: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub m: f64,
    pub stats: RunStats,
    pub sups: SupMonitor,
    pub energies: Vec<EnergyRow>,
    pub snapshots: Vec<Snapshot>,
    pub report: DecayReport,
}

/// One solve with sup-norm and energy monitors. `exec` drives the
/// pointwise kernels inside the run.
pub fn run_decay(cfg: &RunConfig, exec: Execution) -> Result<RunOutput> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let stepper = Stepper::new(&grid, &cfg.params, &cfg.preset, cfg.time.dt, exec)?;
    let init = cfg.data.initial_state(&grid, T0)?;
    let solver = SolverConfig {
        ceiling: cfg.diagnostics.ceiling,
        support_tol: cfg.diagnostics.support_tol,
        support_radius: cfg.data.support_radius(),
        ..SolverConfig::new(cfg.time.t_max, cfg.time.stride)
    };
    let mut sups = SupMonitor::default();
    let mut energy = EnergyMonitor { m: cfg.params.m, rows: Vec::new() };
    let frames = ((cfg.time.t_max - T0) / cfg.time.stride).round() as usize + 1;
    let mut snaps = SnapshotSink::new(frames, cfg.diagnostics.snapshots);
    let summary = if cfg.diagnostics.energies {
        solve_system(&stepper, &init, &solver, &mut [&mut sups, &mut energy, &mut snaps])?
    } else {
        solve_system(&stepper, &init, &solver, &mut [&mut sups, &mut snaps])?
    };
    let m = cfg.params.m.value();
    // a massless run is its own reference
    let reference = (m == 0.0).then(|| sups.u.clone());
    let report = decay_report(m, &sups, &cfg.windows(), reference.as_ref())?;
    Ok(RunOutput {
        m,
        stats: RunStats {
            steps: summary.steps,
            frames: summary.frames,
            t_end: summary.t_end,
            support_leak: summary.support_leak,
        },
        sups,
        energies: energy.rows,
        snapshots: snaps.out,
        report,
    })
}

/// Sorted masses with exact duplicates removed; the flag reports whether
/// any were dropped.
pub fn dedup_masses(masses: &[f64]) -> (Vec<f64>, bool) {
    let mut m = masses.to_vec();
    m.sort_by(f64::total_cmp);
    let before = m.len();
    m.dedup();
    let dropped = m.len() != before;
    (m, dropped)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepFailure {
    pub m: f64,
    pub reason: String,
    /// True when the solver stopped on its blow-up ceiling.
    pub blow_up: bool,
}

#[derive(Debug)]
pub struct Sweep {
    pub runs: Vec<RunOutput>,
    pub spread: f64,
    pub uniform: bool,
    pub failure: Option<SweepFailure>,
}

impl Sweep {
    pub fn reports(&self) -> Vec<DecayReport> {
        self.runs.iter().map(|r| r.report.clone()).collect()
    }
}

/// Independent runs of `base` at each mass. Runs go through
/// `workers.map`, each sequential inside. The first failing mass (in
/// ascending order) marks the sweep failed. When the sweep contains
/// `m = 0`, crossovers of the other masses are measured against it.
pub fn mass_sweep(base: &RunConfig, masses: &[f64], workers: Execution) -> Result<Sweep> {
    if masses.is_empty() {
        return Err(Error::Config("empty mass list".into()));
    }
    let (masses, _) = dedup_masses(masses);
    let cfgs = masses.iter().map(|m| base.with_mass(*m)).collect::<Result<Vec<_>>>()?;
    for c in &cfgs {
        c.validate()?;
    }
    let results = workers.map(cfgs.len(), |i| run_decay(&cfgs[i], Execution::Sequential));
    let mut runs = Vec::new();
    let mut failure = None;
    for (m, r) in masses.iter().zip(results) {
        match r {
            Ok(out) => runs.push(out),
            Err(e) => {
                if failure.is_none() {
                    let blow_up = matches!(e, Error::BlowUp { .. });
                    failure = Some(SweepFailure { m: *m, reason: e.to_string(), blow_up });
                }
            }
        }
    }
    if let Some(reference) = runs.iter().find(|r| r.m == 0.0).map(|r| r.sups.u.clone()) {
        let w = base.windows();
        for r in runs.iter_mut() {
            r.report.crossover = crossover_time(&r.sups.u, r.m, w.crossover.0, w.crossover.1, Some(&reference)).ok();
            r.report.crossover_reference = Some(0.0);
        }
    }
    let spread = spread_ratio(&runs.iter().map(|r| r.report.clone()).collect::<Vec<_>>());
    let uniform = failure.is_none() && spread <= UNIFORMITY_BOUND;
    Ok(Sweep { runs, spread, uniform, failure })
}
