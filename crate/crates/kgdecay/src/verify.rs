//! Verification suites with pinned parameters, one per acceptance
//! criterion. Each suite returns named checks with the measured value and
//! the bound it was held to.

use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::decay::{crossover_scaling, Crossover};
use crate::diagnostics::commutators::{commutator_battery, test_battery};
use crate::diagnostics::energy::{energy_forms, energy_inequality_slack, injected_slice};
use crate::diagnostics::ratios::{hardy_ratio, log_slope, sobolev_quantities, sobolev_ratio, KsMonitor};
use crate::diagnostics::xnorm::{picard_distances, XNormConfig};
use crate::error::{Error, Result};
use crate::field::{AngularField, BoxField};
use crate::grid::{BoxGrid, FieldPair, Grid, RadialGrid};
use crate::growth::{forced_norm_history, l2_growth_classify, weighted_forcing_norm, ConeForcing, FitScale, GrowthBranch};
use crate::hyperboloidal::{frame_matrices, Quantity, SliceSampler, SliceSet};
use crate::par::Execution;
use crate::propagator::{evolve_homogeneous, flat_energy_modal, Mass};
use crate::run::{mass_sweep, DiagnosticsSection, GridSection, Mode, RunConfig, TimeSection, DEFAULT_MASSES, UNIFORMITY_BOUND};
use crate::system::data::{Bump, DataSpec};
use crate::system::history::{Frame, FrameSink, History};
use crate::system::identities::{divergence_decomposition_check, type2_residual};
use crate::system::params::{Preset, SystemParams};
use crate::system::poly::Comp;
use crate::system::solver::{solve_system, SolverConfig, Stepper, T0};
use crate::system::state::ModalState;

/// `(name, criterion)` of every suite, in criterion order.
pub const SUITES: [(&str, u8); 9] = [
    ("decay", 1),
    ("uniformity", 2),
    ("propagator", 3),
    ("energy-forms", 4),
    ("commutators", 5),
    ("picard", 6),
    ("identities", 7),
    ("growth", 8),
    ("inequalities", 9),
];

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, bound: format!("<= {limit:e}"), pass: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, bound: format!(">= {limit:e}"), pass: value >= limit }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, bound: format!("in [{lo}, {hi}]"), pass: value >= lo && value <= hi }
    }

    /// A yes/no condition; `value` is 1 when it holds.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: "holds".into(), pass: ok }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub criterion: u8,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    /// Worst failing check, else the first one.
    pub fn headline(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass).or(self.checks.first())
    }
}

/// Run one suite by name. `exec` drives mass-sweep workers and the
/// pointwise kernels of the single-run suites.
pub fn run_suite(name: &str, exec: Execution) -> Result<SuiteReport> {
    let Some(&(suite, criterion)) = SUITES.iter().find(|s| s.0 == name) else {
        let known: Vec<&str> = SUITES.iter().map(|s| s.0).collect();
        return Err(Error::Config(format!("unknown suite `{name}`; known: {}", known.join(", "))));
    };
    let checks = match suite {
        "decay" => decay_suite(exec)?,
        "uniformity" => uniformity_suite(exec)?,
        "propagator" => propagator_suite(exec)?,
        "energy-forms" => energy_forms_suite(exec)?,
        "commutators" => commutator_suite(exec)?,
        "picard" => picard_suite(exec)?,
        "identities" => identities_suite(exec)?,
        "growth" => growth_suite(exec)?,
        _ => inequalities_suite(exec)?,
    };
    let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
    Ok(SuiteReport { suite: suite.into(), criterion, pass, checks })
}

fn model_params(m: f64) -> Result<SystemParams> {
    Ok(SystemParams { m: Mass::new(m)?, m1: 1.0, n1: 1.0, n2: 1.0, n3: 1.0, p: [1.0, 1.0, 0.0, 0.0] })
}

fn bump6(eps: f64, coefs: [f64; 4]) -> DataSpec {
    DataSpec::new(Bump::Poly { power: 6 }, eps, coefs)
}

/// Sweep configuration of the decay criteria: radial, `R = 420`,
/// `n = 4096`, to `t = 402`, data `ε = 10⁻³` in the rates.
pub fn sweep_config(params: SystemParams) -> RunConfig {
    RunConfig {
        seed: 0,
        execution: Execution::Sequential,
        grid: GridSection { mode: Mode::Radial, extent: 420.0, n: 4096 },
        params,
        preset: Preset::Model,
        data: bump6(1e-3, [0.0, 1.0, 0.0, 1.0]),
        time: TimeSection { dt: 0.016, t_max: 402.0, stride: 0.32 },
        diagnostics: DiagnosticsSection { energies: false, ..Default::default() },
    }
}

fn decay_suite(exec: Execution) -> Result<Vec<Check>> {
    let masses = [0.0, 0.1, 0.2, 0.3, 0.5, 1.0];
    let clock = Instant::now();
    let sweep = mass_sweep(&sweep_config(SystemParams::linear(Mass::ZERO)), &masses, exec)?;
    let seconds = clock.elapsed().as_secs_f64();
    let mut out = vec![Check::holds(
        format!("all runs complete ({})", sweep.failure.as_ref().map_or("ok".into(), |f| f.reason.clone())),
        sweep.failure.is_none(),
    )];
    let report = |m: f64| sweep.runs.iter().find(|r| r.m == m).map(|r| &r.report);
    let p_u = |m: f64| report(m).and_then(|r| r.p_u.as_ref()).map_or(f64::NAN, |p| p.p);
    let t_star = |m: f64| report(m).and_then(|r| r.crossover.and_then(|c| c.t_star())).unwrap_or(f64::NAN);
    out.push(Check::within("p_u at m = 0", p_u(0.0), -1.1, -0.9));
    out.push(Check::within("p_u at m = 1", p_u(1.0), -1.6, -1.4));
    out.push(Check::within("t* m^2 at m = 0.3", t_star(0.3) * 0.09, 0.3, 3.0));
    out.push(Check::holds(
        "no crossover at m = 0",
        matches!(report(0.0).and_then(|r| r.crossover), Some(Crossover::NotReached)),
    ));
    out.push(Check::holds(
        "m = 1 already past the crossover",
        matches!(report(1.0).and_then(|r| r.crossover), Some(Crossover::BeforeWindow)),
    ));
    let pairs: Vec<(f64, f64)> = [0.1, 0.2, 0.3, 0.5].iter().map(|m| (*m, t_star(*m))).collect();
    let slope = if pairs.iter().all(|p| p.1.is_finite()) { crossover_scaling(&pairs) } else { None };
    out.push(Check::within("log t* against log m", slope.unwrap_or(f64::NAN), -2.4, -1.6));
    out.push(Check::at_most(format!("sweep seconds, {} runs at n = 4096", masses.len()), seconds, 120.0));
    Ok(out)
}

fn uniformity_suite(exec: Execution) -> Result<Vec<Check>> {
    let clock = Instant::now();
    let sweep = mass_sweep(&sweep_config(model_params(0.0)?), &DEFAULT_MASSES, exec)?;
    let seconds = clock.elapsed().as_secs_f64();
    let mut out = vec![Check::holds(
        format!("all runs complete ({})", sweep.failure.as_ref().map_or("ok".into(), |f| f.reason.clone())),
        sweep.failure.is_none(),
    )];
    out.push(Check::at_most("C_u spread", sweep.spread, UNIFORMITY_BOUND));
    for r in &sweep.runs {
        let p = r.report.p_v.as_ref().map_or(f64::NAN, |p| p.p);
        out.push(Check::within(format!("p_v at m = {}", r.m), p, -1.6, -1.3));
    }
    out.push(Check::at_most("sweep seconds", seconds, 600.0));
    Ok(out)
}

fn rel_sup_diff(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    grid.sup_abs(&d) / grid.sup_abs(b).max(f64::MIN_POSITIVE)
}

fn energy_drift(grid: &Grid, m: f64, exec: Execution) -> Result<f64> {
    let params = SystemParams::linear(Mass::new(m)?);
    let dt = 0.5 * Stepper::dt_max(grid, params.m);
    let st = Stepper::new(grid, &params, &Preset::Model, dt, exec)?;
    let mut s = ModalState::from_state(grid, &bump6(0.1, [1.0, 1.0, 1.0, 1.0]).initial_state(grid, T0)?)?;
    let energy = |s: &ModalState| flat_energy_modal(grid, &s.u, params.m) + flat_energy_modal(grid, &s.v, Mass::ONE);
    let e0 = energy(&s);
    let mut worst = 0.0f64;
    for k in 1..=10_000 {
        st.step(&mut s)?;
        if k % 100 == 0 {
            worst = worst.max((energy(&s) / e0 - 1.0).abs());
        }
    }
    Ok(worst)
}

/// Reversibility `E(-τ)E(τ) = I` and group property `E(a)E(b) = E(a+b)`.
fn flow_defects(grid: &Grid, m: f64) -> Result<(f64, f64)> {
    let m = Mass::new(m)?;
    let init = bump6(1.0, [1.0, -0.5, 0.0, 0.0]).initial_state(grid, T0)?.u;
    let back = evolve_homogeneous(grid, &evolve_homogeneous(grid, &init, m, 7.3)?, m, -7.3)?;
    let rev = rel_sup_diff(grid, &back.value, &init.value).max(rel_sup_diff(grid, &back.rate, &init.rate));
    let ab = evolve_homogeneous(grid, &evolve_homogeneous(grid, &init, m, 1.3)?, m, 2.9)?;
    let direct = evolve_homogeneous(grid, &init, m, 4.2)?;
    let group = rel_sup_diff(grid, &ab.value, &direct.value).max(rel_sup_diff(grid, &ab.rate, &direct.rate));
    Ok((rev, group))
}

/// Radial wave with `u₀ = u₁ = e^{-r²}`: `r u = ½[(r+t)e^{-(r+t)²} +
/// (r-t)e^{-(r-t)²}] + ¼[e^{-(r-t)²} - e^{-(r+t)²}]`.
fn dalembert_error(t: f64) -> Result<f64> {
    let rg = RadialGrid::new(40.0, 1024)?;
    let nodes = rg.nodes();
    let grid = Grid::Radial(rg);
    let g = |x: f64| (-x * x).exp();
    let w0: Vec<f64> = nodes.iter().map(|r| r * g(*r)).collect();
    let init = FieldPair::new(w0.clone(), w0)?;
    let got = evolve_homogeneous(&grid, &init, Mass::ZERO, t)?;
    let exact: Vec<f64> = nodes
        .iter()
        .map(|&r| 0.5 * ((r + t) * g(r + t) + (r - t) * g(r - t)) + 0.25 * (g(r - t) - g(r + t)))
        .collect();
    Ok(rel_sup_diff(&grid, &got.value, &exact))
}

fn propagator_suite(exec: Execution) -> Result<Vec<Check>> {
    let radial = Grid::radial(40.0, 1024)?;
    let cube = Grid::cube(8.0, 32)?;
    let mut out = Vec::new();
    out.push(Check::at_most("energy drift over 1e4 steps, radial", energy_drift(&radial, 0.5, exec)?, 1e-10));
    out.push(Check::at_most("energy drift over 1e4 steps, box", energy_drift(&cube, 0.5, exec)?, 1e-10));
    for (label, grid) in [("radial", &radial), ("box", &cube)] {
        for m in [0.0, 1.0] {
            let (rev, group) = flow_defects(grid, m)?;
            out.push(Check::at_most(format!("reversibility, {label}, m = {m}"), rev, 1e-12));
            out.push(Check::at_most(format!("group property, {label}, m = {m}"), group, 1e-12));
        }
    }
    out.push(Check::at_most("d'Alembert agreement at t = 10", dalembert_error(10.0)?, 1e-8));
    Ok(out)
}

fn sampled_run(
    grid: &Grid,
    params: &SystemParams,
    data: DataSpec,
    dt: f64,
    t_max: f64,
    s_values: &[f64],
    quantities: Vec<Quantity>,
    exec: Execution,
) -> Result<Vec<SliceSet<AngularField>>> {
    let st = Stepper::new(grid, params, &Preset::Model, dt, exec)?;
    let init = data.initial_state(grid, T0)?;
    let mut sm = SliceSampler::<AngularField>::new(grid, s_values, quantities, 2.0 * dt, exec)?;
    solve_system(&st, &init, &SolverConfig::new(t_max, 2.0 * dt), &mut [&mut sm])?;
    sm.finish()
}

fn energy_forms_suite(exec: Execution) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut rng = StdRng::seed_from_u64(5);
    let mut defect = 0.0f64;
    for _ in 0..10_000 {
        let t: f64 = rng.gen_range(0.1..500.0);
        let x = [0; 3].map(|_| rng.gen_range(-2.0 * t..2.0 * t));
        defect = defect.max(frame_matrices(t, x)?.identity_defect());
    }
    out.push(Check::at_most("frame identity defect", defect, 1e-14));

    let rg = RadialGrid::new(16.0, 256)?;
    let bg = BoxGrid::new(7.0, 32)?;
    let mut injected = 0.0f64;
    for tf in test_battery(21, 3) {
        let ang = tf.spatial_angular(&rg)?;
        let boxed = tf.spatial_box(&bg, exec)?;
        for s in [2.5, 3.5] {
            let sl = injected_slice(&ang, &tf.time, s);
            injected = injected.max(energy_forms(&sl, &sl.fields[0], 0.7)?.1);
            let sl: SliceSet<BoxField> = injected_slice(&boxed, &tf.time, s);
            injected = injected.max(energy_forms(&sl, &sl.fields[0], 0.7)?.1);
        }
    }
    out.push(Check::at_most("energy forms on injected fields", injected, 1e-10));

    let grid = Grid::radial(20.0, 256)?;
    let s_values: Vec<f64> = (0..=12).map(|i| 2.0 + 0.25 * i as f64).collect();
    let q = || {
        let mut q = Vec::new();
        for c in [Comp::U, Comp::V] {
            q.push(Quantity::field(c, Vec::new(), true));
            q.push(Quantity::source(c));
        }
        q
    };
    let m = 0.5;
    let runs = [
        ("linear", SystemParams::linear(Mass::new(m)?), 1.0),
        ("nonlinear", model_params(m)?, 0.5),
    ];
    for (label, params, eps) in runs {
        let slices = sampled_run(&grid, &params, bump6(eps, [1.0; 4]), 0.01, T0 + 12.0, &s_values, q(), exec)?;
        let mut spread = 0.0f64;
        for sl in &slices {
            for c in [Comp::U, Comp::V] {
                let mc = if c == Comp::U { m } else { 1.0 };
                spread = spread.max(energy_forms(sl, sl.get(&Quantity::field(c, Vec::new(), true))?, mc)?.1);
            }
        }
        out.push(Check::at_most(format!("energy forms on interpolated slices, {label}"), spread, 1e-3));
        let mut slack = f64::INFINITY;
        for (c, mc) in [(Comp::U, m), (Comp::V, 1.0)] {
            for p in energy_inequality_slack(&slices, c, mc)? {
                slack = slack.min(p.relative);
            }
        }
        out.push(Check::at_least(format!("energy inequality slack, {label}"), slack, -1e-3));
    }
    Ok(out)
}

fn commutator_suite(exec: Execution) -> Result<Vec<Check>> {
    let masses = [0.0, 0.5, 1.0];
    let rg = RadialGrid::new(16.0, 256)?;
    let bg = BoxGrid::new(7.0, 32)?;
    let mut radial = (0.0f64, 0usize);
    for f in test_battery(7, 3) {
        let checks = commutator_battery(&f.name, &f.angular_jet(&rg, 2.5, 6)?, &masses)?;
        radial.1 += checks.len();
        radial.0 = checks.iter().map(|c| c.residual).fold(radial.0, f64::max);
    }
    let mut cube = (0.0f64, 0usize);
    for f in test_battery(11, 1) {
        let checks = commutator_battery(&f.name, &f.box_jet(&bg, 2.5, 6, exec)?, &masses)?;
        cube.1 += checks.len();
        cube.0 = checks.iter().map(|c| c.residual).fold(cube.0, f64::max);
    }
    Ok(vec![
        Check::at_most(format!("commutators, radial fields ({} identities)", radial.1), radial.0, 1e-5),
        Check::at_most(format!("commutators, box fields ({} identities)", cube.1), cube.0, 1e-5),
    ])
}

fn picard_suite(exec: Execution) -> Result<Vec<Check>> {
    let grid = Grid::radial(52.0, 512)?;
    let t_max = 50.0;
    let mut out = Vec::new();
    for m in [0.1, 1.0] {
        let st = Stepper::new(&grid, &model_params(m)?, &Preset::Model, 0.0125, exec)?;
        let init = bump6(1e-3, [1.0; 4]).initial_state(&grid, T0)?;
        let cfg = XNormConfig::new(m, vec![2.0, 4.0, 6.0, 8.0, 9.5]);
        let (run, norms) = picard_distances::<AngularField>(&st, &init, t_max, 1.0, 6, &cfg)?;
        let d: Vec<f64> = norms.iter().map(|x| x.total()).collect();
        let ratio = |n: usize| if d[n - 1] > 0.0 { d[n] / d[n - 1] } else if d[n] == 0.0 { 0.0 } else { f64::INFINITY };
        let worst = (2..=5).map(ratio).fold(0.0, f64::max);
        out.push(Check::at_most(format!("max d_(n+1)/d_n, n = 2..5, m = {m}"), worst, 0.5));
        let direct = solve_system(&st, &init, &SolverConfig::new(t_max, 1.0), &mut [])?.final_state;
        let mut ratio_to_bound = 0.0f64;
        for (lim, dir) in [(&run.limit.u.value, &direct.u.value), (&run.limit.v.value, &direct.v.value)] {
            let diff: Vec<f64> = lim.iter().zip(dir).map(|(a, b)| a - b).collect();
            // roundoff of two different operation orders grows with the step count
            let floor = run.steps as f64 * f64::EPSILON * grid.sup_abs(dir);
            let bound = 10.0 * run.final_sup[5] + floor;
            ratio_to_bound = ratio_to_bound.max(grid.sup_abs(&diff) / bound);
        }
        out.push(Check::at_most(format!("limit vs direct solve over 10 d_last + floor, m = {m}"), ratio_to_bound, 1.0));
    }
    Ok(out)
}

fn identity_history(grid: &Grid, params: &SystemParams, preset: &Preset, dt: f64, exec: Execution) -> Result<History> {
    let st = Stepper::new(grid, params, preset, dt, exec)?;
    let init = bump6(0.3, [1.0, 0.5, 1.0, -1.0]).initial_state(grid, T0)?;
    let mut h = History::new(2.0 * dt);
    solve_system(&st, &init, &SolverConfig::new(T0 + 4.0, 2.0 * dt), &mut [&mut h])?;
    Ok(h)
}

fn identities_suite(exec: Execution) -> Result<Vec<Check>> {
    let grid = Grid::radial(12.0, 128)?;
    let model = SystemParams { m: Mass::new(0.5)?, m1: 2.0, n1: 1.0, n2: 1.0, n3: 1.0, p: [1.5, 0.0, 0.0, 0.0] };
    let type2 = Preset::Type2Pair { qv: 1.0 };
    let linear = SystemParams::linear(Mass::new(0.5)?);
    let decomposition = |dt: f64| -> Result<f64> {
        let h = identity_history(&grid, &model, &Preset::Model, dt, exec)?;
        Ok(divergence_decomposition_check(&grid, &h, &model, &Preset::Model, exec)?.max_relative())
    };
    let residual2 = |dt: f64| -> Result<f64> {
        let h = identity_history(&grid, &linear, &type2, dt, exec)?;
        Ok(type2_residual(&grid, &h, &linear, &type2, exec)?.max_relative())
    };
    let mut out = Vec::new();
    for (label, a, b) in [
        ("divergence decomposition", decomposition(0.01)?, decomposition(0.005)?),
        ("type-2 residual", residual2(0.01)?, residual2(0.005)?),
    ] {
        out.push(Check::at_least(format!("{label} order"), (a / b).log2(), 1.9));
        out.push(Check::at_most(format!("{label} at dt = 1e-2"), a, 1e-3));
    }
    Ok(out)
}

fn growth_suite(exec: Execution) -> Result<Vec<Check>> {
    let grid = Grid::radial(420.0, 2048)?;
    let mut out = Vec::new();
    for q in [0.3, 0.0, -0.3] {
        let forcing = ConeForcing { q, amplitude: 1.0 };
        // the weighted hypothesis ‖r f‖ ~ t^{q-1}
        let (t1, t2) = (50.0, 400.0);
        let k = (weighted_forcing_norm(&grid, &forcing, t2) / weighted_forcing_norm(&grid, &forcing, t1)).ln()
            / (t2 / t1).ln();
        out.push(Check::within(format!("forcing weight exponent, q = {q}"), k - (q - 1.0), -0.02, 0.02));
        let series = forced_norm_history(&grid, Arc::new(forcing), 0.025, 402.0, 1.0, exec)?;
        let series: Vec<(f64, f64)> = series.into_iter().filter(|p| p.0 > T0).collect();
        let fit = l2_growth_classify(&series, q, FitScale::SquaredNorm)?;
        out.push(Check::holds(format!("branch {:?} for q = {q}", fit.branch), fit.branch == GrowthBranch::expected_for(q)));
        out.push(Check::within(format!("fitted q for q = {q}"), fit.q_fit.unwrap_or(f64::NAN), q - 0.1, q + 0.1));
    }
    Ok(out)
}

fn inequalities_suite(exec: Execution) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let grid = Grid::radial(40.0, 512)?;
    let dt = 0.01;
    let st = Stepper::new(&grid, &SystemParams::linear(Mass::ZERO), &Preset::Model, dt, exec)?;
    let init = bump6(1.0, [1.0; 4]).initial_state(&grid, T0)?;
    let mut ku = KsMonitor::<AngularField>::new(Comp::U, 2, exec)?;
    let mut kv = KsMonitor::<AngularField>::new(Comp::V, 2, exec)?;
    let mut q = Vec::new();
    for c in [Comp::U, Comp::V] {
        q.extend(sobolev_quantities(c));
        q.push(Quantity::field(c, Vec::new(), false));
    }
    let s_values: Vec<f64> = (0..=10).map(|i| 2.5 + 0.5 * i as f64).collect();
    let mut sm = SliceSampler::<AngularField>::new(&grid, &s_values, q, 0.05, exec)?;
    let mut ks_sink = |g: &Grid, f: &Frame| {
        let k = (f.t - T0) / 0.5;
        if (k - k.round()).abs() < 1e-6 {
            ku.accept(g, f)?;
            kv.accept(g, f)?;
        }
        Ok(())
    };
    solve_system(&st, &init, &SolverConfig::new(32.0, 0.05), &mut [&mut ks_sink, &mut sm])?;
    for (label, mon) in [("u, m = 0", &ku), ("v, m = 1", &kv)] {
        let slope = log_slope(&mon.series()).unwrap_or(f64::NAN);
        out.push(Check::at_most(format!("KS ratio log-slope, {label}"), slope, 0.05));
    }
    let slices = sm.finish()?;
    for (label, c) in [("u, m = 0", Comp::U), ("v, m = 1", Comp::V)] {
        let pts = slices.iter().map(|s| sobolev_ratio(s, c)).collect::<Result<Vec<_>>>()?;
        out.push(Check::at_most(format!("Sobolev ratio log-slope, {label}"), log_slope(&pts).unwrap_or(f64::NAN), 0.05));
    }

    let rg = RadialGrid::new(8.0, 512)?;
    let mut hardy = 0.0f64;
    for power in [3, 4, 6, 8] {
        for scale in [0.5, 1.0, 2.0] {
            let b = Bump::Poly { power };
            let prof: Vec<f64> = rg.nodes().iter().map(|r| b.value(r / scale)).collect();
            hardy = hardy.max(hardy_ratio(&AngularField::radial(&rg, prof)?, 8.0)?);
        }
    }
    let bg = BoxGrid::new(4.0, 48)?;
    let b = Bump::Poly { power: 6 };
    let data = (0..bg.len())
        .map(|i| {
            let p = bg.position(i);
            b.value(((p[0] - 0.3).powi(2) + p[1] * p[1] + (p[2] + 0.2).powi(2)).sqrt() / 1.5)
        })
        .collect();
    hardy = hardy.max(hardy_ratio(&BoxField::new(&bg, data, exec)?, 4.0)?);
    out.push(Check::at_most("Hardy ratio on the bump battery", hardy, 2.1));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_a_config_error() {
        assert!(matches!(run_suite("nope", Execution::Sequential), Err(Error::Config(_))));
    }

    #[test]
    fn checks_compare_as_labelled() {
        assert!(Check::at_most("a", 1.0, 1.0).pass);
        assert!(!Check::at_most("a", f64::NAN, 1.0).pass);
        assert!(!Check::within("b", 2.0, -1.0, 1.0).pass);
        assert!(Check::at_least("c", 0.0, -1e-3).pass);
    }

    #[test]
    fn sweep_config_is_valid() {
        sweep_config(SystemParams::linear(Mass::ZERO)).validate().unwrap();
        sweep_config(model_params(1.0).unwrap()).validate().unwrap();
    }
}
