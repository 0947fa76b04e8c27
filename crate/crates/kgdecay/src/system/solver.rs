//! Strang splitting around the exact linear propagators.
//!
//! One step is `E(dt/2)`, a kick of the rate slots by the nonlinear sources,
//! then `E(dt/2)`. The sources depend on `∂_t u` and `∂_t v`, so the kick
//! integrates the rate-only flow with the explicit midpoint rule: a plain
//! Euler kick would drop the scheme to first order.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralCoeffs};
use crate::par::Execution;
use crate::propagator::{multiplier_omega, Mass, Rotation};
use crate::system::history::{Frame, FrameSink, Jet};
use crate::system::params::{Preset, SystemParams};
use crate::system::poly::{Channel, ChannelSet, Comp, Geometry, Nonlinearity};
use crate::system::state::{modal_channels, ModalState, SystemState};

/// Time of the data, `t₀ = 2`.
pub const T0: f64 = 2.0;

/// Extra time-dependent physical sources added to `(F_u, F_v)`, used for
/// manufactured solutions.
pub trait Forcing: Send + Sync {
    fn source(&self, grid: &Grid, t: f64) -> (Vec<f64>, Vec<f64>);
}

pub fn geometry_of(grid: &Grid) -> Geometry {
    match grid {
        Grid::Radial(_) => Geometry::Radial,
        Grid::Box(_) => Geometry::Box,
    }
}

/// Precomputed pieces for stepping one system at a fixed `dt`.
#[derive(Clone)]
pub struct Stepper {
    grid: Grid,
    nl: Nonlinearity,
    nl_rate: Nonlinearity,
    need: Vec<Channel>,
    need_rate: Vec<Channel>,
    masses: [Mass; 2],
    omega2: [Vec<f64>; 2],
    half: [Rotation; 2],
    dt: f64,
    exec: Execution,
    forcing: Option<Arc<dyn Forcing>>,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper").field("grid", &self.grid).field("dt", &self.dt).finish()
    }
}

impl Stepper {
    pub fn new(
        grid: &Grid,
        params: &SystemParams,
        preset: &Preset,
        dt: f64,
        exec: Execution,
    ) -> Result<Self> {
        let nl = Nonlinearity::build(params, preset, geometry_of(grid))?;
        Self::from_nonlinearity(grid, nl, params.m, dt, exec)
    }

    pub fn from_nonlinearity(
        grid: &Grid,
        nl: Nonlinearity,
        m: Mass,
        dt: f64,
        exec: Execution,
    ) -> Result<Self> {
        let masses = [m, Mass::ONE];
        let omega = masses.map(|m| multiplier_omega(grid, m));
        let w_max = omega.iter().flatten().fold(0.0f64, |a, b| a.max(*b));
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if dt > 0.5 / w_max * (1.0 + 1e-12) {
            return Err(Error::param(
                "dt",
                format!("{dt} exceeds the stability bound 0.5/ω_max = {}", 0.5 / w_max),
            ));
        }
        let nl_rate = nl.time_derivative();
        let need = nl.channels();
        let mut need_rate = nl_rate.channels();
        need_rate.extend(need.iter().copied());
        need_rate.sort();
        need_rate.dedup();
        let half = [Rotation::new(&omega[0], 0.5 * dt), Rotation::new(&omega[1], 0.5 * dt)];
        let omega2 = omega.map(|w| w.iter().map(|x| x * x).collect());
        Ok(Self {
            grid: grid.clone(),
            nl,
            nl_rate,
            need,
            need_rate,
            masses,
            omega2,
            half,
            dt,
            exec,
            forcing: None,
        })
    }

    pub fn with_forcing(mut self, forcing: Arc<dyn Forcing>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn masses(&self) -> [Mass; 2] {
        self.masses
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    /// `dt` bound `0.5 / ω_max` over both components.
    pub fn dt_max(grid: &Grid, m: Mass) -> f64 {
        let w = [m, Mass::ONE]
            .iter()
            .flat_map(|m| multiplier_omega(grid, *m))
            .fold(0.0f64, f64::max);
        0.5 / w
    }

    pub fn half_flow(&self, s: &mut ModalState) {
        self.half[0].apply(&mut s.u.c, &mut s.u.ct);
        self.half[1].apply(&mut s.v.c, &mut s.v.ct);
        s.t += 0.5 * self.dt;
    }

    pub(crate) fn nl_rate(&self) -> &Nonlinearity {
        &self.nl_rate
    }

    pub(crate) fn has_forcing(&self) -> bool {
        self.forcing.is_some()
    }

    pub(crate) fn uses_rates(&self) -> bool {
        self.need.contains(&Channel::rate(Comp::U)) || self.need.contains(&Channel::rate(Comp::V))
    }

    fn add_forcing(&self, t: f64, f: &mut (Vec<f64>, Vec<f64>)) {
        if let Some(force) = &self.forcing {
            let (a, b) = force.source(&self.grid, t);
            f.0.iter_mut().zip(a).for_each(|(x, y)| *x += y);
            f.1.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    /// Effective kick source `g(H)`: the midpoint-rule increment divided by
    /// `dt` for the rate-only flow starting from the half-stepped state `H`.
    pub fn effective_source_from(&self, base: &ChannelSet, t_mid: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.grid.len();
        let mut f1 = self.nl.eval(base, n, self.exec)?;
        self.add_forcing(t_mid, &mut f1);
        if !self.uses_rates() {
            return Ok(f1);
        }
        let mid = self.midpoint_channels(base, &f1);
        let mut f2 = self.nl.eval(&mid, n, self.exec)?;
        self.add_forcing(t_mid, &mut f2);
        Ok(f2)
    }

    /// Channels with the rate slots advanced by `dt/2 · f`.
    pub(crate) fn midpoint_channels(&self, base: &ChannelSet, f: &(Vec<f64>, Vec<f64>)) -> ChannelSet {
        let mut mid = base.clone();
        for (comp, fc) in [(Comp::U, &f.0), (Comp::V, &f.1)] {
            let ch = Channel::rate(comp);
            if let Some(r) = base.get(ch) {
                let h = 0.5 * self.dt;
                mid.insert(ch, r.iter().zip(fc).map(|(a, b)| a + h * b).collect());
            }
        }
        mid
    }

    pub fn channels(&self, s: &ModalState) -> ChannelSet {
        let mut need = self.need.clone();
        if self.uses_rates() {
            need.push(Channel::rate(Comp::U));
            need.push(Channel::rate(Comp::V));
        }
        modal_channels(&self.grid, s, &need, self.exec)
    }

    /// Forward transform of a physical pair of sources.
    pub fn source_coeffs(&self, g: &(Vec<f64>, Vec<f64>)) -> Result<(SpectralCoeffs, SpectralCoeffs)> {
        let (a, b) = (self.grid.to_native(&g.0), self.grid.to_native(&g.1));
        match &self.grid {
            Grid::Radial(rg) => {
                let (ca, cb) = rg.forward_pair(&a, &b)?;
                Ok((SpectralCoeffs::Sine(ca), SpectralCoeffs::Sine(cb)))
            }
            Grid::Box(_) => Ok((
                self.grid.forward_with(&a, self.exec)?,
                self.grid.forward_with(&b, self.exec)?,
            )),
        }
    }

    /// One Strang step.
    pub fn step(&self, s: &mut ModalState) -> Result<()> {
        self.half_flow(s);
        if !self.nl.is_zero() || self.forcing.is_some() {
            let base = self.channels(s);
            let g = self.effective_source_from(&base, s.t)?;
            if let Some(bad) = g.0.iter().chain(&g.1).position(|x| !x.is_finite()) {
                return Err(Error::BlowUp {
                    t: s.t,
                    reason: format!("non-finite source at sample {}", bad % self.grid.len()),
                });
            }
            let (gu, gv) = self.source_coeffs(&g)?;
            s.u.ct.axpy(self.dt, &gu);
            s.v.ct.axpy(self.dt, &gv);
        }
        self.half_flow(s);
        Ok(())
    }

    /// Physical `(F_u, F_v)` at the state's own time.
    pub fn sources(&self, s: &ModalState) -> Result<(Vec<f64>, Vec<f64>)> {
        let set = self.channels(s);
        let mut f = self.nl.eval(&set, self.grid.len(), self.exec)?;
        self.add_forcing(s.t, &mut f);
        Ok(f)
    }

    /// Native samples of `-ω² c + src`, the equation-of-motion second
    /// derivative of a mode vector driven by the physical source `src`.
    fn driven_native(&self, comp: Comp, c: &SpectralCoeffs, src: &[f64]) -> Vec<f64> {
        let mut c = c.clone();
        scale_modes(&mut c, &self.omega2[comp as usize], -1.0);
        let mut a = self.grid.inverse_with(&c, self.exec);
        a.iter_mut().zip(self.grid.to_native(src)).for_each(|(x, y)| *x += y);
        a
    }

    /// Channels for the time-differentiated sources: orders 0 and 1 from the
    /// modes, order 2 from the equation of motion with source `src`.
    pub(crate) fn jet_channels(&self, s: &ModalState, src: &(Vec<f64>, Vec<f64>)) -> ChannelSet {
        let mut set = modal_channels(&self.grid, s, &self.need_rate, self.exec);
        for (comp, f) in [(Comp::U, &src.0), (Comp::V, &src.1)] {
            let ch = Channel { comp, order: 2, axis: None };
            if self.need_rate.contains(&ch) {
                let a = self.driven_native(comp, &s.component(comp).c, f);
                set.insert(ch, self.grid.physical(&a));
            }
        }
        set
    }

    /// Frame of a mode state driven by a given source and its time rate.
    pub(crate) fn frame_from(
        &self,
        s: &ModalState,
        src: (Vec<f64>, Vec<f64>),
        src_rate: (Vec<f64>, Vec<f64>),
    ) -> Frame {
        let grid = &self.grid;
        let jet = |comp: Comp, f: &[f64], fr: &[f64]| {
            let m = s.component(comp);
            Jet {
                levels: vec![
                    grid.inverse_with(&m.c, self.exec),
                    grid.inverse_with(&m.ct, self.exec),
                    self.driven_native(comp, &m.c, f),
                    self.driven_native(comp, &m.ct, fr),
                ],
            }
        };
        let u = jet(Comp::U, &src.0, &src_rate.0);
        let v = jet(Comp::V, &src.1, &src_rate.1);
        Frame { t: s.t, u, v, source: [src.0, src.1], source_rate: [src_rate.0, src_rate.1] }
    }

    /// `∂_t^k` jets of both components at the state's time. The second and
    /// third levels come from the equations of motion.
    pub fn frame(&self, s: &ModalState) -> Result<Frame> {
        let grid = &self.grid;
        let n = grid.len();
        let set = modal_channels(grid, s, &self.need_rate, self.exec);
        let mut f = self.nl.eval(&set, n, self.exec)?;
        self.add_forcing(s.t, &mut f);
        let set = self.jet_channels(s, &f);
        let mut fr = self.nl_rate.eval(&set, n, self.exec)?;
        if let Some(force) = &self.forcing {
            let h = 1e-4;
            let (a1, b1) = force.source(grid, s.t + h);
            let (a0, b0) = force.source(grid, s.t - h);
            for i in 0..n {
                fr.0[i] += (a1[i] - a0[i]) / (2.0 * h);
                fr.1[i] += (b1[i] - b0[i]) / (2.0 * h);
            }
        }
        Ok(self.frame_from(s, f, fr))
    }
}

/// `c_k *= a · w_k` per mode.
pub(crate) fn scale_modes(c: &mut SpectralCoeffs, w: &[f64], a: f64) {
    match c {
        SpectralCoeffs::Sine(x) => x.iter_mut().zip(w).for_each(|(p, q)| *p *= a * q),
        SpectralCoeffs::Fourier(x) => x.iter_mut().zip(w).for_each(|(p, q)| *p *= a * q),
    }
}

/// Run-level controls for [`solve_system`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub t_max: f64,
    /// Output stride; must be a whole number of steps.
    pub stride: f64,
    /// Abort when `sup |u|` or `sup |v|` exceeds this at a frame.
    pub ceiling: f64,
    /// Abort when fields outside the light cone of the data exceed this.
    pub support_tol: Option<f64>,
    /// Radius of the ball holding the data support.
    pub support_radius: f64,
}

impl SolverConfig {
    pub fn new(t_max: f64, stride: f64) -> Self {
        Self { t_max, stride, ceiling: 1e3, support_tol: None, support_radius: 1.0 }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub steps: usize,
    pub frames: usize,
    pub t_end: f64,
    /// Largest `|u|, |v|` seen outside `r = R_data + (t - t₀) + 2h`.
    pub support_leak: f64,
    pub final_state: SystemState,
}

pub(crate) fn whole_steps(span: f64, dt: f64, what: &'static str) -> Result<usize> {
    let k = span / dt;
    let r = k.round();
    if (k - r).abs() > 1e-6 || r < 1.0 {
        return Err(Error::param(what, format!("{span} is not a whole number of steps of {dt}")));
    }
    Ok(r as usize)
}

/// Sup of physical values outside the light cone of the data.
pub(crate) fn support_leak(grid: &Grid, frame: &Frame, radius: f64, t0: f64) -> f64 {
    let cut = radius + (frame.t - t0) + 2.0 * grid.spacing();
    let mut worst = 0.0f64;
    for jet in [&frame.u, &frame.v] {
        let phys = grid.physical(jet.level(0));
        for (i, x) in phys.iter().enumerate() {
            if grid.radius(i) > cut {
                worst = worst.max(x.abs());
            }
        }
    }
    worst
}

/// Evolve `initial` to `cfg.t_max`, feeding a frame to every sink each
/// `cfg.stride` (including the initial time).
pub fn solve_system(
    stepper: &Stepper,
    initial: &SystemState,
    cfg: &SolverConfig,
    sinks: &mut [&mut dyn FrameSink],
) -> Result<RunSummary> {
    let grid = stepper.grid();
    let dt = stepper.dt();
    let t0 = initial.t;
    if !(cfg.t_max > t0) {
        return Err(Error::param("t_max", format!("must exceed the initial time {t0}")));
    }
    let n_steps = whole_steps(cfg.t_max - t0, dt, "t_max")?;
    let per_frame = whole_steps(cfg.stride, dt, "stride")?;
    let mut s = ModalState::from_state(grid, initial)?;
    let mut leak = 0.0f64;
    let mut frames = 0;
    let mut emit = |s: &ModalState, frames: &mut usize, leak: &mut f64| -> Result<()> {
        let frame = stepper.frame(s)?;
        for jet in [&frame.u, &frame.v] {
            let sup = grid.sup_abs(jet.level(0));
            if !sup.is_finite() || sup > cfg.ceiling {
                return Err(Error::BlowUp {
                    t: s.t,
                    reason: format!("sup norm {sup:e} exceeds ceiling {:e}", cfg.ceiling),
                });
            }
        }
        let l = support_leak(grid, &frame, cfg.support_radius, t0);
        *leak = leak.max(l);
        if let Some(tol) = cfg.support_tol {
            if l > tol {
                return Err(Error::Unsupported(format!(
                    "support leak {l:e} above tolerance {tol:e} at t = {}",
                    s.t
                )));
            }
        }
        for sink in sinks.iter_mut() {
            sink.accept(grid, &frame)?;
        }
        *frames += 1;
        Ok(())
    };
    emit(&s, &mut frames, &mut leak)?;
    for k in 1..=n_steps {
        stepper.step(&mut s)?;
        s.t = t0 + k as f64 * dt;
        if k % per_frame == 0 {
            emit(&s, &mut frames, &mut leak)?;
        }
    }
    Ok(RunSummary {
        steps: n_steps,
        frames,
        t_end: s.t,
        support_leak: leak,
        final_state: s.to_state(grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::evolve_homogeneous;
    use crate::system::data::{Bump, DataSpec};
    use crate::system::history::History;

    fn model(m: f64) -> SystemParams {
        SystemParams {
            m: Mass::new(m).unwrap(),
            m1: 1.0,
            n1: 1.0,
            n2: 0.5,
            n3: 1.0,
            p: [1.0, 0.5, 0.0, 0.0],
        }
    }

    fn data(eps: f64) -> DataSpec {
        DataSpec::new(Bump::Poly { power: 6 }, eps, [1.0, 0.5, 1.0, -0.5])
    }

    #[test]
    fn linear_step_matches_propagator() {
        let g = Grid::radial(12.0, 128).unwrap();
        let p = SystemParams::linear(Mass::new(0.4).unwrap());
        let st = Stepper::new(&g, &p, &Preset::Model, 0.01, Execution::Sequential).unwrap();
        let s0 = data(1.0).initial_state(&g, T0).unwrap();
        let mut s = ModalState::from_state(&g, &s0).unwrap();
        for _ in 0..100 {
            st.step(&mut s).unwrap();
        }
        let got = s.to_state(&g);
        let want = evolve_homogeneous(&g, &s0.u, p.m, 1.0).unwrap();
        let err = got.u.value.iter().zip(&want.value).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    fn final_u(dt: f64, g: &Grid, preset: &Preset, m: f64) -> Vec<f64> {
        let st = Stepper::new(g, &model(m), preset, dt, Execution::Sequential).unwrap();
        let s0 = data(0.5).initial_state(g, T0).unwrap();
        let cfg = SolverConfig::new(T0 + 1.0, 0.5);
        let out = solve_system(&st, &s0, &cfg, &mut []).unwrap();
        let mut v = out.final_state.u.value;
        v.extend(out.final_state.v.rate);
        v
    }

    #[test]
    fn nonlinear_step_is_second_order() {
        let g = Grid::radial(10.0, 64).unwrap();
        for preset in [Preset::Model, Preset::Type2Pair { qv: 1.0 }] {
            let a = final_u(0.02, &g, &preset, 0.5);
            let b = final_u(0.01, &g, &preset, 0.5);
            let c = final_u(0.005, &g, &preset, 0.5);
            let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            let rate = (d(&a, &b) / d(&b, &c)).log2();
            assert!(rate > 1.9, "{preset:?}: observed order {rate}");
        }
    }

    #[test]
    fn frames_carry_equation_of_motion_jets() {
        let g = Grid::radial(10.0, 128).unwrap();
        let st = Stepper::new(&g, &model(0.3), &Preset::Model, 0.0005, Execution::Sequential).unwrap();
        let s0 = data(0.5).initial_state(&g, T0).unwrap();
        let mut h = History::new(0.002);
        let cfg = SolverConfig::new(T0 + 0.004, 0.002);
        solve_system(&st, &s0, &cfg, &mut [&mut h]).unwrap();
        // centred differences of the rate and acceleration levels
        for (lv, tol) in [(1usize, 1e-4), (2, 1e-4)] {
            for comp in [Comp::U, Comp::V] {
                let fd: Vec<f64> = (0..g.len())
                    .map(|i| {
                        (h.frames[2].jet(comp).levels[lv][i] - h.frames[0].jet(comp).levels[lv][i]) / 0.004
                    })
                    .collect();
                let err = fd
                    .iter()
                    .zip(&h.frames[1].jet(comp).levels[lv + 1])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let scale = g.sup_abs(&h.frames[1].jet(comp).levels[lv + 1]);
                assert!(err < tol * scale.max(1.0), "{comp:?} level {lv}: {err}");
            }
        }
    }

    #[test]
    fn large_data_reports_blow_up() {
        let g = Grid::radial(10.0, 128).unwrap();
        let st = Stepper::new(&g, &model(0.3), &Preset::Model, 0.01, Execution::Sequential).unwrap();
        let s0 = data(10.0).initial_state(&g, T0).unwrap();
        let cfg = SolverConfig::new(T0 + 20.0, 0.1);
        let err = solve_system(&st, &s0, &cfg, &mut []).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }), "{err}");
    }

    #[test]
    fn rejects_unstable_dt() {
        let g = Grid::radial(10.0, 128).unwrap();
        let dt = Stepper::dt_max(&g, Mass::ONE) * 1.1;
        assert!(Stepper::new(&g, &model(1.0), &Preset::Model, dt, Execution::Sequential).is_err());
    }
}
