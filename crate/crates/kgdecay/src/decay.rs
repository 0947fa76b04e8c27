//! Sup-norm series, decay exponents, the unified constant
//! `C_u = sup_t A(t) (t + m t^{3/2})`, and slope-crossover detection.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::system::history::{Frame, FrameSink};
use crate::system::poly::Comp;

/// `(t, A(t) = sup_x |φ(t, x)|)` of one component.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DecaySeries {
    pub component: String,
    pub points: Vec<(f64, f64)>,
}

impl DecaySeries {
    pub fn new(component: &str) -> Self {
        Self { component: component.into(), points: Vec::new() }
    }

    pub fn window(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        self.points.iter().copied().filter(|p| p.0 >= lo - 1e-9 && p.0 <= hi + 1e-9).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,sup_{}", self.component)?;
        for (t, a) in &self.points {
            writeln!(w, "{t:.16e},{a:.16e}")?;
        }
        Ok(())
    }
}

/// Frame sink recording the sup series of both components, including the
/// origin value on radial grids.
#[derive(Clone, Debug)]
pub struct SupMonitor {
    pub u: DecaySeries,
    pub v: DecaySeries,
}

impl Default for SupMonitor {
    fn default() -> Self {
        Self { u: DecaySeries::new("u"), v: DecaySeries::new("v") }
    }
}

impl SupMonitor {
    pub fn series(&self, comp: Comp) -> &DecaySeries {
        match comp {
            Comp::U => &self.u,
            Comp::V => &self.v,
        }
    }
}

impl FrameSink for SupMonitor {
    fn accept(&mut self, grid: &Grid, frame: &Frame) -> Result<()> {
        self.u.points.push((frame.t, grid.sup_abs(frame.u.level(0))));
        self.v.points.push((frame.t, grid.sup_abs(frame.v.level(0))));
        Ok(())
    }
}

/// Running maximum over the forward window `[t, t + 8π/m]`, four periods
/// of the slowest Klein–Gordon oscillation. Looking forward keeps early
/// large values from leaking into later times. `m = 0` returns the series
/// unchanged.
pub fn envelope(points: &[(f64, f64)], m: f64) -> Vec<(f64, f64)> {
    if m <= 0.0 {
        return points.to_vec();
    }
    let width = 8.0 * std::f64::consts::PI / m;
    let mut out = vec![(0.0, 0.0); points.len()];
    // indices of a decreasing run of values, front is the window max
    let mut q: VecDeque<usize> = VecDeque::new();
    let mut hi = points.len();
    for i in (0..points.len()).rev() {
        let t = points[i].0;
        while hi > i + 1 && points[hi - 1].0 > t + width {
            hi -= 1;
            if q.back() == Some(&hi) {
                q.pop_back();
            }
        }
        while q.front().is_some_and(|&j| points[j].1 <= points[i].1) {
            q.pop_front();
        }
        q.push_front(i);
        out[i] = (t, points[*q.back().unwrap()].1);
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentFit {
    pub p: f64,
    /// Two standard errors of the slope, widened by the largest upward step
    /// of the envelope when it is not monotone.
    pub width: f64,
    pub n_points: usize,
    pub non_monotone: bool,
}

struct Line {
    slope: f64,
    slope_se: f64,
}

fn fit_line(xy: &[(f64, f64)]) -> Line {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let slope_se = if xy.len() > 2 && sxx > 0.0 { (residual / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    Line { slope, slope_se }
}

fn log_points(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect()
}

/// Log–log slope of the envelope over `[lo, hi]`, which must span a decade.
pub fn fit_exponent(series: &DecaySeries, lo: f64, hi: f64, m: f64) -> Result<ExponentFit> {
    if !(lo > 0.0 && hi >= 10.0 * lo) {
        return Err(Error::param("window", format!("[{lo}, {hi}] spans less than a decade")));
    }
    let env = envelope(&series.points, m);
    let sel: Vec<(f64, f64)> = env.into_iter().filter(|p| p.0 >= lo - 1e-9 && p.0 <= hi + 1e-9).collect();
    let xy = log_points(&sel);
    if xy.len() < 8 {
        return Err(Error::param("window", format!("only {} positive samples in [{lo}, {hi}]", xy.len())));
    }
    let line = fit_line(&xy);
    let rise = xy.windows(2).map(|w| w[1].1 - w[0].1).fold(0.0, f64::max);
    let non_monotone = rise > 0.01;
    let mut width = 2.0 * line.slope_se;
    if non_monotone {
        width += rise;
    }
    Ok(ExponentFit { p: line.slope, width, n_points: xy.len(), non_monotone })
}

/// `sup_t A(t) (t + m t^{3/2})`.
pub fn unified_constant(series: &DecaySeries, m: f64) -> Result<f64> {
    if series.points.is_empty() {
        return Err(Error::param("series", "empty"));
    }
    Ok(series.points.iter().map(|(t, a)| a * (t + m * t.powf(1.5))).fold(0.0, f64::max))
}

/// `sup_t A_v(t) t^{3/2 - δ}`.
pub fn v_constant(series: &DecaySeries, delta: f64) -> Result<f64> {
    if series.points.is_empty() {
        return Err(Error::param("series", "empty"));
    }
    Ok(series.points.iter().map(|(t, a)| a * t.powf(1.5 - delta)).fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Crossover {
    Detected { t_star: f64 },
    /// The `-3/2` branch already holds at the window start.
    BeforeWindow,
    /// No transition inside the window.
    NotReached,
}

impl Crossover {
    pub fn t_star(&self) -> Option<f64> {
        match self {
            Crossover::Detected { t_star } => Some(*t_star),
            _ => None,
        }
    }
}

/// Local slope marking the switch between the `-1` and `-3/2` branches.
pub const CROSSOVER_SLOPE: f64 = -1.25;

/// Width in `log t` of the local slope fits (a factor of two in `t`).
const LOCAL_WIDTH: f64 = std::f64::consts::LN_2;

/// `A_m(t) · c₀ / (t A₀(t))` with `c₀ = t A₀(t)` at the last sample: the
/// series with the near-field transient of the massless run on the same
/// data divided out. Samples where `A₀` vanishes are dropped.
pub fn normalize_by_reference(series: &DecaySeries, reference: &DecaySeries) -> Result<DecaySeries> {
    if series.points.len() != reference.points.len()
        || series.points.iter().zip(&reference.points).any(|(a, b)| (a.0 - b.0).abs() > 1e-9)
    {
        return Err(Error::param("reference", "sample times differ from the series"));
    }
    let &(t_end, a_end) = reference.points.last().ok_or(Error::param("reference", "empty"))?;
    let c0 = t_end * a_end;
    let mut out = DecaySeries::new(&series.component);
    out.points = series
        .points
        .iter()
        .zip(&reference.points)
        .filter(|(_, r)| r.1 > 0.0)
        .map(|(p, r)| (p.0, p.1 * c0 / (p.0 * r.1)))
        .collect();
    Ok(out)
}

/// First time in `[lo, hi]` where the local log–log slope of the envelope
/// drops below [`CROSSOVER_SLOPE`] after having been above it. Slopes come
/// from least-squares fits over windows of a factor two in `t`, centred on
/// 200 log-spaced points.
///
/// With a massless `reference` run on the same data the series is first
/// normalized by it ([`normalize_by_reference`]), so that only the
/// mass-induced change of slope is seen.
pub fn crossover_time(
    series: &DecaySeries,
    m: f64,
    lo: f64,
    hi: f64,
    reference: Option<&DecaySeries>,
) -> Result<Crossover> {
    if !(lo > 0.0 && hi > 2.0 * lo) {
        return Err(Error::param("window", format!("[{lo}, {hi}] is narrower than a factor 2")));
    }
    let normalized;
    let base = match reference {
        Some(r) => {
            normalized = normalize_by_reference(series, r)?;
            &normalized
        }
        None => series,
    };
    let env = envelope(&base.points, m);
    let sel: Vec<(f64, f64)> = env.into_iter().filter(|p| p.0 >= lo - 1e-9 && p.0 <= hi + 1e-9).collect();
    let xy = log_points(&sel);
    if xy.len() < 8 {
        return Err(Error::param("window", format!("only {} positive samples in [{lo}, {hi}]", xy.len())));
    }
    let (x0, x1) = (xy[0].0 + 0.5 * LOCAL_WIDTH, xy[xy.len() - 1].0 - 0.5 * LOCAL_WIDTH);
    let n_centres = 200;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..n_centres {
        let xc = x0 + (x1 - x0) * i as f64 / (n_centres - 1) as f64;
        let local: Vec<(f64, f64)> = xy.iter().copied().filter(|p| (p.0 - xc).abs() <= 0.5 * LOCAL_WIDTH).collect();
        if local.len() < 3 {
            continue;
        }
        let slope = fit_line(&local).slope;
        match prev {
            None if slope <= CROSSOVER_SLOPE => return Ok(Crossover::BeforeWindow),
            Some((xp, sp)) if slope <= CROSSOVER_SLOPE => {
                let f = (sp - CROSSOVER_SLOPE) / (sp - slope);
                return Ok(Crossover::Detected { t_star: (xp + f * (xc - xp)).exp() });
            }
            _ => prev = Some((xc, slope)),
        }
    }
    Ok(Crossover::NotReached)
}

/// Slope of `log t*` against `log m` over `(m, t*)` pairs with `m > 0`;
/// `t* ~ m⁻²` gives -2.
pub fn crossover_scaling(pairs: &[(f64, f64)]) -> Option<f64> {
    let xy = log_points(pairs);
    (xy.len() >= 2).then(|| fit_line(&xy).slope)
}

/// Per-mass summary of one run.
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub m: f64,
    pub p_u: Option<ExponentFit>,
    pub c_u: f64,
    pub crossover: Option<Crossover>,
    /// Mass of the run the crossover series was normalized by, if any.
    pub crossover_reference: Option<f64>,
    pub p_v: Option<ExponentFit>,
    pub c_v: f64,
    pub status: String,
}

#[derive(Clone, Copy, Debug)]
pub struct DecayWindows {
    pub fit: (f64, f64),
    pub crossover: (f64, f64),
    pub delta: f64,
}

impl Default for DecayWindows {
    fn default() -> Self {
        Self { fit: (10.0, 400.0), crossover: (3.0, 400.0), delta: 0.05 }
    }
}

/// Report of one run. `reference` is the `u` series of a massless run on
/// the same data and grid, used for the crossover.
pub fn decay_report(
    m: f64,
    sups: &SupMonitor,
    w: &DecayWindows,
    reference: Option<&DecaySeries>,
) -> Result<DecayReport> {
    let p_u = fit_exponent(&sups.u, w.fit.0, w.fit.1, m).ok();
    let p_v = fit_exponent(&sups.v, w.fit.0, w.fit.1, 1.0).ok();
    let crossover = crossover_time(&sups.u, m, w.crossover.0, w.crossover.1, reference).ok();
    Ok(DecayReport {
        m,
        p_u,
        c_u: unified_constant(&sups.u, m)?,
        crossover,
        crossover_reference: reference.map(|_| 0.0),
        p_v,
        c_v: v_constant(&sups.v, w.delta)?,
        status: "ok".into(),
    })
}

/// `max C_u / min C_u` over a sweep.
pub fn spread_ratio(reports: &[DecayReport]) -> f64 {
    let max = reports.iter().map(|r| r.c_u).fold(0.0, f64::max);
    let min = reports.iter().map(|r| r.c_u).fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::Execution;
    use crate::propagator::Mass;
    use crate::system::data::{Bump, DataSpec};
    use crate::system::params::{Preset, SystemParams};
    use crate::system::solver::{solve_system, SolverConfig, Stepper, T0};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn synthetic(mut f: impl FnMut(f64) -> f64) -> DecaySeries {
        let mut s = DecaySeries::new("u");
        s.points = (0..400).map(|k| 2.0 + k as f64).map(|t| (t, f(t))).collect();
        s
    }

    #[test]
    fn exact_power_law() {
        let s = synthetic(|t| 5.0 * t.powf(-1.5));
        let f = fit_exponent(&s, 10.0, 400.0, 0.0).unwrap();
        assert!((f.p + 1.5).abs() < 0.02 && !f.non_monotone, "{f:?}");
        assert!(fit_exponent(&s, 10.0, 50.0, 0.0).is_err());
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = StdRng::seed_from_u64(4);
        let s = synthetic(|t| 5.0 * t.powf(-1.5) * (1.0 + 0.1 * rng.gen_range(-1.0..1.0)));
        let f = fit_exponent(&s, 10.0, 400.0, 0.0).unwrap();
        assert!((f.p + 1.5).abs() < 0.1, "{f:?}");
        assert!(f.non_monotone);
    }

    #[test]
    fn envelope_follows_oscillation_peaks() {
        let m = 1.0;
        let s = synthetic(|t| t.powf(-1.5) * (m * t).cos().abs());
        let mut fine = s.clone();
        fine.points = (0..40000).map(|k| 2.0 + 0.01 * k as f64).map(|t| (t, t.powf(-1.5) * (m * t).cos().abs())).collect();
        let f = fit_exponent(&fine, 10.0, 400.0, m).unwrap();
        assert!((f.p + 1.5).abs() < 0.05, "{f:?}");
    }

    #[test]
    fn constants() {
        let s = synthetic(|t| 1.0 / (t + 0.3 * t.powf(1.5)));
        assert!((unified_constant(&s, 0.3).unwrap() - 1.0).abs() < 1e-12);
        let w = synthetic(|t| 1.0 / t);
        assert!((unified_constant(&w, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(unified_constant(&DecaySeries::new("u"), 0.0).is_err());
    }

    #[test]
    fn crossover_of_a_synthetic_minimum() {
        // min{1/t, m⁻¹ t^{-3/2}} switches at t = m⁻²
        for m in [0.2, 0.3] {
            let s = synthetic(|t| (1.0 / t).min(t.powf(-1.5) / m));
            let c = crossover_time(&s, 0.0, 3.0, 400.0, None).unwrap();
            let t = c.t_star().unwrap();
            assert!((t * m * m - 1.0).abs() < 0.1, "{m}: {c:?}");
        }
        let wave = synthetic(|t| 1.0 / t);
        assert_eq!(crossover_time(&wave, 0.0, 3.0, 400.0, None).unwrap(), Crossover::NotReached);
        let kg = synthetic(|t| t.powf(-1.5));
        assert_eq!(crossover_time(&kg, 0.0, 3.0, 400.0, None).unwrap(), Crossover::BeforeWindow);
    }

    #[test]
    fn scaling_of_exact_pairs() {
        let pairs: Vec<(f64, f64)> = [0.1, 0.2, 0.5].iter().map(|m| (*m, 1.7 / (m * m))).collect();
        assert!((crossover_scaling(&pairs).unwrap() + 2.0).abs() < 1e-12);
        assert!(crossover_scaling(&pairs[..1]).is_none());
    }

    #[test]
    fn reference_removes_a_shared_transient() {
        // A₀ = 1/(t - 1.5) has a steep start; A_m = A₀ (1 + m²t)^{-1/2}
        // reaches local slope -1.25 exactly at m²t = 1 once A₀ is divided out
        let reference = synthetic(|t| 1.0 / (t - 1.5));
        for m in [0.1, 0.2, 0.3] {
            let s = synthetic(|t| (1.0 + m * m * t).powf(-0.5) / (t - 1.5));
            let raw = crossover_time(&s, 0.0, 3.0, 400.0, None).unwrap();
            assert_eq!(raw, Crossover::BeforeWindow);
            let c = crossover_time(&s, 0.0, 3.0, 400.0, Some(&reference)).unwrap();
            let t = c.t_star().unwrap();
            assert!((t * m * m - 1.0).abs() < 0.05, "{m}: {c:?}");
        }
        let same = crossover_time(&reference, 0.0, 3.0, 400.0, Some(&reference)).unwrap();
        assert_eq!(same, Crossover::NotReached);
        let mut short = reference.clone();
        short.points.pop();
        assert!(normalize_by_reference(&reference, &short).is_err());
    }

    #[test]
    fn envelope_is_a_forward_running_max() {
        let pts: Vec<(f64, f64)> = (0..2000).map(|k| 0.05 * k as f64).map(|t| (t, (t.sin()).abs() / (1.0 + t))).collect();
        let m = 1.0;
        let env = envelope(&pts, m);
        let w = 8.0 * std::f64::consts::PI;
        for (i, &(t, e)) in env.iter().enumerate().step_by(37) {
            let brute = pts[i..].iter().filter(|p| p.0 <= t + w).map(|p| p.1).fold(0.0, f64::max);
            assert_eq!(e, brute);
        }
        assert_eq!(envelope(&pts, 0.0), pts);
    }

    #[test]
    fn linearity_of_sup_series() {
        let grid = Grid::radial(40.0, 512).unwrap();
        let st = Stepper::new(&grid, &SystemParams::linear(Mass::new(0.3).unwrap()), &Preset::Model, 0.01, Execution::Sequential)
            .unwrap();
        let run = |eps: f64| {
            let init = DataSpec::new(Bump::Poly { power: 6 }, eps, [0.0, 1.0, 0.0, 1.0]).initial_state(&grid, T0).unwrap();
            let mut sm = SupMonitor::default();
            solve_system(&st, &init, &SolverConfig::new(T0 + 20.0, 0.5), &mut [&mut sm]).unwrap();
            sm
        };
        let (a, b) = (run(1.0), run(2.0));
        for (p, q) in a.u.points.iter().zip(&b.u.points) {
            assert!((q.1 - 2.0 * p.1).abs() <= 1e-6 * q.1.max(1e-300));
        }
        let zero = run(1e-300);
        assert!(zero.v.points.iter().all(|p| p.1 < 1e-290));
    }
}
