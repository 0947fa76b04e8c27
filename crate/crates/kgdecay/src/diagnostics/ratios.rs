//! Monitors for the functional inequalities: Klainerman–Sobolev, the
//! hyperboloidal Sobolev bound and Hardy's inequality. Each reports the ratio
//! of the left side to the right side; the inequalities say these stay
//! bounded, not what the constants are.

use serde::Serialize;

use crate::diagnostics::words::{all_word_jets, words_up_to, FieldJet, Letter, Word};
use crate::error::{Error, Result};
use crate::field::FieldRepr;
use crate::grid::Grid;
use crate::hyperboloidal::{Quantity, SliceSet};
use crate::par::Execution;
use crate::system::history::{Frame, FrameSink, Jet};
use crate::system::poly::Comp;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RatioPoint {
    /// `t` or `s`.
    pub time: f64,
    pub ratio: f64,
}

/// Least-squares slope of `log y` against `log x` over positive samples.
pub fn log_slope(points: &[RatioPoint]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|p| p.time > 0.0 && p.ratio > 0.0).map(|p| (p.time.ln(), p.ratio.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Streams frames and records, per frame, `sup_x |φ|` and `‖Γ^I φ‖` for
/// every word with `|I| ≤ cap`.
pub struct KsMonitor<F> {
    comp: Comp,
    cap: usize,
    exec: Execution,
    times: Vec<f64>,
    sup: Vec<f64>,
    norms: Vec<Vec<f64>>,
    _field: std::marker::PhantomData<F>,
}

impl<F: FieldRepr> KsMonitor<F> {
    pub fn new(comp: Comp, cap: usize, exec: Execution) -> Result<Self> {
        if cap + 1 > crate::system::history::JET_LEVELS {
            return Err(Error::param("cap", format!("at most {} with stored jets", crate::system::history::JET_LEVELS - 1)));
        }
        Ok(Self { comp, cap, exec, times: Vec::new(), sup: Vec::new(), norms: Vec::new(), _field: Default::default() })
    }

    fn add(&mut self, grid: &Grid, frame: &Frame) -> Result<()> {
        let jet = frame.jet(self.comp);
        let short = Jet { levels: jet.levels[..self.cap + 1].to_vec() };
        let base = FieldJet::<F>::from_jet(grid, frame.t, &short, self.exec)?;
        let words = all_word_jets(&base, &Letter::all(), self.cap)?;
        let norms = self.exec.map(words.len(), |i| words[i].1.value().norm_sq().sqrt());
        self.times.push(frame.t);
        self.sup.push(grid.sup_abs(jet.level(0)));
        self.norms.push(norms);
        Ok(())
    }

    /// `sup|φ(t)| t / Σ_I sup_{t' ≤ 2t} ‖Γ^I φ(t')‖` for every recorded `t`
    /// with `2t` inside the window. Zero fields give zero.
    pub fn series(&self) -> Vec<RatioPoint> {
        let Some(&end) = self.times.last() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (k, &t) in self.times.iter().enumerate() {
            if 2.0 * t > end + 1e-9 {
                break;
            }
            let upto = self.times.iter().take_while(|x| **x <= 2.0 * t + 1e-9).count();
            let nw = self.norms[0].len();
            let denom: f64 = (0..nw)
                .map(|w| self.norms[..upto].iter().map(|n| n[w]).fold(0.0, f64::max))
                .sum();
            let ratio = if denom > 0.0 { self.sup[k] * t / denom } else { 0.0 };
            out.push(RatioPoint { time: t, ratio });
        }
        out
    }
}

impl<F: FieldRepr> FrameSink for KsMonitor<F> {
    fn accept(&mut self, grid: &Grid, frame: &Frame) -> Result<()> {
        self.add(grid, frame)
    }
}

/// The thirteen boost words `L^J`, `|J| ≤ 2`.
pub fn boost_words() -> Vec<Word> {
    words_up_to(&Letter::boosts(), 2)
}

/// Slice quantities the Sobolev ratio needs.
pub fn sobolev_quantities(comp: Comp) -> Vec<Quantity> {
    boost_words().into_iter().map(|w| Quantity::field(comp, w, false)).collect()
}

/// `sup_{ℋ_s} t^{3/2} |φ| / Σ_{|J| ≤ 2} ‖L^J φ‖_{L²_f(ℋ_s)}`.
pub fn sobolev_ratio<F: FieldRepr>(slice: &SliceSet<F>, comp: Comp) -> Result<RatioPoint> {
    let g = &slice.geometry;
    let mut lhs = slice.get(&Quantity::field(comp, Vec::new(), false))?.value.clone();
    let t32: Vec<f64> = g.times.iter().map(|t| t.powf(1.5)).collect();
    lhs.scale_nodes(&t32);
    let sup = lhs.sup_abs_masked(Some(&g.mask));
    let mut denom = 0.0;
    for q in sobolev_quantities(comp) {
        denom += slice.norm_sq(&slice.get(&q)?.value).sqrt();
    }
    Ok(RatioPoint { time: g.s, ratio: if denom > 0.0 { sup / denom } else { 0.0 } })
}

/// `‖φ / r‖ / Σ_a ‖∂_a φ‖`. `extent` is the grid's outer radius; the field
/// must have decayed by `0.9 extent`.
pub fn hardy_ratio<F: FieldRepr>(phi: &F, extent: f64) -> Result<f64> {
    let sup = phi.sup_abs();
    let edge = (0..phi.nodes())
        .filter(|i| phi.node_radius(*i) >= 0.9 * extent)
        .fold(0.0f64, |a, i| a.max(phi.node_abs(i)));
    if edge > 1e-8 * sup {
        return Err(Error::param("field", format!("not decayed at the grid edge ({edge:e} vs sup {sup:e})")));
    }
    let inv_r: Vec<f64> = (0..phi.nodes())
        .map(|i| {
            let r = phi.node_radius(i);
            if r > 0.0 {
                1.0 / r
            } else {
                0.0
            }
        })
        .collect();
    let mut q = phi.clone();
    q.scale_nodes(&inv_r);
    let denom: f64 = (0..3).map(|a| phi.deriv(a).norm_sq().sqrt()).sum();
    Ok(if denom > 0.0 { q.norm_sq().sqrt() / denom } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AngularField, BoxField};
    use crate::grid::{BoxGrid, RadialGrid};
    use crate::hyperboloidal::SliceSampler;
    use crate::propagator::Mass;
    use crate::system::data::{Bump, DataSpec};
    use crate::system::params::{Preset, SystemParams};
    use crate::system::solver::{solve_system, SolverConfig, Stepper, T0};

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<RatioPoint> =
            (1..20).map(|k| RatioPoint { time: k as f64, ratio: 3.0 * (k as f64).powf(-0.5) }).collect();
        assert!((log_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        assert!(log_slope(&pts[..1]).is_none());
    }

    #[test]
    fn hardy_on_bumps() {
        let rg = RadialGrid::new(8.0, 512).unwrap();
        for power in [3, 4, 6, 8] {
            for scale in [0.5, 1.0, 2.0] {
                let b = Bump::Poly { power };
                let prof: Vec<f64> = rg.nodes().iter().map(|r| b.value(r / scale)).collect();
                let f = AngularField::radial(&rg, prof).unwrap();
                let r = hardy_ratio(&f, 8.0).unwrap();
                assert!(r < 2.1 && r > 0.5, "{power} {scale}: {r}");
                let mut g = f.clone();
                g.scale(-3.0);
                assert!((hardy_ratio(&g, 8.0).unwrap() / r - 1.0).abs() < 1e-12);
            }
        }
        // shell far from the origin
        let prof: Vec<f64> = rg.nodes().iter().map(|r| Bump::Poly { power: 6 }.value((2.0 * (r - 5.0)).abs())).collect();
        let far = hardy_ratio(&AngularField::radial(&rg, prof).unwrap(), 8.0).unwrap();
        assert!(far < 0.5, "{far}");
        let edge: Vec<f64> = rg.nodes().iter().map(|r| (-r / 4.0).exp()).collect();
        assert!(hardy_ratio(&AngularField::radial(&rg, edge).unwrap(), 8.0).is_err());
    }

    #[test]
    fn hardy_on_box_bump() {
        let g = BoxGrid::new(4.0, 48).unwrap();
        let b = Bump::Poly { power: 6 };
        let data = (0..g.len())
            .map(|i| {
                let p = g.position(i);
                let r = ((p[0] - 0.3).powi(2) + p[1] * p[1] + (p[2] + 0.2).powi(2)).sqrt();
                b.value(r / 1.5)
            })
            .collect();
        let f = BoxField::new(&g, data, Execution::Parallel).unwrap();
        let r = hardy_ratio(&f, 4.0).unwrap();
        assert!(r < 2.1 && r > 0.3, "{r}");
    }

    fn linear_run(eps: f64, t_max: f64, s_values: &[f64]) -> (Vec<RatioPoint>, Vec<RatioPoint>) {
        let grid = Grid::radial(24.0, 256).unwrap();
        let dt = 0.01;
        let st = Stepper::new(&grid, &SystemParams::linear(Mass::ZERO), &Preset::Model, dt, Execution::Sequential)
            .unwrap();
        let init = DataSpec::new(Bump::Poly { power: 6 }, eps, [1.0, 0.0, 1.0, 0.0]).initial_state(&grid, T0).unwrap();
        let mut ks = KsMonitor::<AngularField>::new(Comp::U, 2, Execution::Sequential).unwrap();
        let mut q = sobolev_quantities(Comp::V);
        q.push(Quantity::field(Comp::V, Vec::new(), false));
        let mut sm = SliceSampler::<AngularField>::new(&grid, s_values, q, 0.05, Execution::Sequential).unwrap();
        let mut ks_sink = |g: &Grid, f: &Frame| {
            if ((f.t - T0) / 0.5).fract().abs() < 1e-6 || ((f.t - T0) / 0.5).fract() > 1.0 - 1e-6 {
                ks.accept(g, f)?;
            }
            Ok(())
        };
        solve_system(&st, &init, &SolverConfig::new(t_max, 0.05), &mut [&mut ks_sink, &mut sm]).unwrap();
        let sob = sm.finish().unwrap().iter().map(|s| sobolev_ratio(s, Comp::V).unwrap()).collect();
        (ks.series(), sob)
    }

    #[test]
    fn ratios_are_bounded_and_homogeneous() {
        let s_values = [2.5, 3.0, 3.5, 4.0, 4.5, 5.0];
        let (ks1, sob1) = linear_run(1.0, 14.0, &s_values);
        let (ks2, sob2) = linear_run(2.0, 14.0, &s_values);
        assert!(ks1.len() >= 8);
        for (a, b) in ks1.iter().zip(&ks2) {
            assert!((a.ratio / b.ratio - 1.0).abs() < 1e-10);
        }
        for (a, b) in sob1.iter().zip(&sob2) {
            assert!((a.ratio / b.ratio - 1.0).abs() < 1e-10);
        }
        assert!(log_slope(&ks1).unwrap() <= 0.05, "{ks1:?}");
        assert!(log_slope(&sob1).unwrap() <= 0.05, "{sob1:?}");
    }
}
