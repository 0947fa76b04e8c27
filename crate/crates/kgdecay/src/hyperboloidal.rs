//! Hyperboloids `ℋ_s = {t = sqrt(s² + |x|²)}` inside the cone `{r < t - 1}`,
//! the semi-hyperboloidal frame, and restriction of flat-time frames onto
//! slices.
//!
//! Runs are solved in flat time; slices are filled while frames stream past
//! by cubic Hermite interpolation in time at each spatial node. Spatial
//! derivatives are taken spectrally at the frames and interpolated the same
//! way.

use std::io::Write;

use crate::diagnostics::words::{word_name, FieldJet, Word};
use crate::error::{Error, Result};
use crate::field::FieldRepr;
use crate::grid::Grid;
use crate::par::Execution;
use crate::system::history::{Frame, FrameSink};
use crate::system::poly::Comp;

pub fn slice_time(s: f64, r: f64) -> f64 {
    (s * s + r * r).sqrt()
}

/// `|x|` where `ℋ_s` meets the cone boundary `r = t - 1`.
pub fn cone_radius(s: f64) -> f64 {
    0.5 * (s * s - 1.0)
}

/// `Φ` maps `(∂_t, ∂_a)` to `(∂_t, ∂̲_a)`; `Ψ` is its inverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameMatrices {
    pub phi: [[f64; 4]; 4],
    pub psi: [[f64; 4]; 4],
}

pub fn frame_matrices(t: f64, x: [f64; 3]) -> Result<FrameMatrices> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("frame matrices need t > 0, got {t}")));
    }
    let mut phi = [[0.0; 4]; 4];
    let mut psi = [[0.0; 4]; 4];
    for i in 0..4 {
        phi[i][i] = 1.0;
        psi[i][i] = 1.0;
    }
    for a in 0..3 {
        phi[a + 1][0] = x[a] / t;
        psi[a + 1][0] = -x[a] / t;
    }
    Ok(FrameMatrices { phi, psi })
}

impl FrameMatrices {
    pub fn product(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..4).map(|k| self.phi[i][k] * self.psi[k][j]).sum();
            }
        }
        out
    }

    /// `max |ΦΨ - I|`.
    pub fn identity_defect(&self) -> f64 {
        let p = self.product();
        let mut worst = 0.0f64;
        for (i, row) in p.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                worst = worst.max((x - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }
}

/// What a slice carries: a component of the solution or of the right-hand
/// side, with a word applied first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Quantity {
    pub rhs: bool,
    pub comp: Comp,
    pub word: Word,
    /// Also carry `∂_a` of the field.
    pub gradient: bool,
}

impl Quantity {
    pub fn field(comp: Comp, word: Word, gradient: bool) -> Self {
        Self { rhs: false, comp, word, gradient }
    }

    pub fn source(comp: Comp) -> Self {
        Self { rhs: true, comp, word: Vec::new(), gradient: false }
    }

    pub fn name(&self) -> String {
        let c = match self.comp {
            Comp::U => "u",
            Comp::V => "v",
        };
        let base = if self.rhs { format!("F_{c}") } else { c.to_string() };
        if self.word.is_empty() {
            base
        } else {
            format!("{}({base})", word_name(&self.word))
        }
    }
}

/// Value, time derivative and (optionally) gradient of one field restricted
/// to a slice. Nodes outside the cone are zero.
#[derive(Clone, Debug)]
pub struct SampledField<F> {
    pub value: F,
    pub dt: F,
    pub grad: Vec<F>,
}

/// `times[i] = sqrt(s² + r_i²)`; `mask[i]` marks cone nodes.
#[derive(Clone, Debug)]
pub struct SliceGeometry {
    pub s: f64,
    pub times: Vec<f64>,
    pub mask: Vec<bool>,
}

impl SliceGeometry {
    pub fn new<F: FieldRepr>(proto: &F, s: f64) -> Self {
        let rc = cone_radius(s);
        let n = proto.nodes();
        let times = (0..n).map(|i| slice_time(s, proto.node_radius(i))).collect();
        let mask = (0..n).map(|i| proto.node_radius(i) < rc).collect();
        Self { s, times, mask }
    }

    /// Flat-measure weights: one on the cone, zero outside.
    pub fn weights(&self) -> Vec<f64> {
        self.mask.iter().map(|m| if *m { 1.0 } else { 0.0 }).collect()
    }

    pub fn inv_times(&self) -> Vec<f64> {
        self.times.iter().map(|t| 1.0 / t).collect()
    }

    /// Latest time the cone section reaches.
    pub fn t_top(&self) -> f64 {
        0.5 * (self.s * self.s + 1.0)
    }
}

#[derive(Clone, Debug)]
pub struct SliceSet<F> {
    pub geometry: SliceGeometry,
    pub quantities: Vec<Quantity>,
    pub fields: Vec<SampledField<F>>,
}

impl<F: FieldRepr> SliceSet<F> {
    pub fn s(&self) -> f64 {
        self.geometry.s
    }

    pub fn get(&self, q: &Quantity) -> Result<&SampledField<F>> {
        self.quantities
            .iter()
            .position(|x| x == q)
            .map(|i| &self.fields[i])
            .ok_or_else(|| Error::Unsupported(format!("slice does not carry {}", q.name())))
    }

    /// `∂̲_a φ = (x^a / t) ∂_t φ + ∂_a φ`.
    pub fn underline(&self, f: &SampledField<F>, axis: usize) -> Result<F> {
        let g = f.grad.get(axis).ok_or_else(|| Error::Unsupported("slice field lacks a gradient".into()))?;
        let mut out = f.dt.mul_coord(axis);
        out.scale_nodes(&self.geometry.inv_times());
        out.axpy(1.0, g);
        Ok(out)
    }

    /// `∂_⊥ φ = ∂_t φ + (x^a / t) ∂_a φ`.
    pub fn perp(&self, f: &SampledField<F>) -> Result<F> {
        if f.grad.len() != 3 {
            return Err(Error::Unsupported("slice field lacks a gradient".into()));
        }
        let mut acc = f.grad[0].mul_coord(0);
        acc.axpy(1.0, &f.grad[1].mul_coord(1));
        acc.axpy(1.0, &f.grad[2].mul_coord(2));
        acc.scale_nodes(&self.geometry.inv_times());
        acc.axpy(1.0, &f.dt);
        Ok(acc)
    }

    /// `‖φ‖_{L²_f(ℋ_s)}²`: the flat integral over the cone section.
    pub fn norm_sq(&self, f: &F) -> f64 {
        f.inner_weighted(f, Some(&self.geometry.weights()))
    }

    /// One row per cone node: `node, radius, t`, then `|value|` of each
    /// quantity (largest sampled direction for angular fields).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let proto = &self.fields.first().ok_or_else(|| Error::Unsupported("empty slice".into()))?.value;
        write!(w, "node,radius,t")?;
        for q in &self.quantities {
            write!(w, ",abs_{}", q.name())?;
        }
        writeln!(w)?;
        for i in (0..proto.nodes()).filter(|i| self.geometry.mask[*i]) {
            write!(w, "{i},{:e},{:e}", proto.node_radius(i), self.geometry.times[i])?;
            for f in &self.fields {
                write!(w, ",{:e}", f.value.node_abs(i))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn hermite(theta: f64, h: f64) -> ([f64; 4], [f64; 4]) {
    let (s, s2, s3) = (theta, theta * theta, theta * theta * theta);
    let val = [2.0 * s3 - 3.0 * s2 + 1.0, (s3 - 2.0 * s2 + s) * h, -2.0 * s3 + 3.0 * s2, (s3 - s2) * h];
    let der = [
        (6.0 * s2 - 6.0 * s) / h,
        3.0 * s2 - 4.0 * s + 1.0,
        (-6.0 * s2 + 6.0 * s) / h,
        3.0 * s2 - 2.0 * s,
    ];
    (val, der)
}

/// Node weights a frame contributes: `(node, w_value, w_rate, d_value, d_rate)`.
type Contribution = (usize, f64, f64, f64, f64);

struct SliceState<F> {
    geometry: SliceGeometry,
    fields: Vec<SampledField<F>>,
    /// Frame index of the lower bracket and whether the upper end matters.
    interval: Vec<(i64, bool)>,
    got_lower: Vec<bool>,
    got_upper: Vec<bool>,
}

/// Frame sink that fills slices `ℋ_s` for a fixed list of `s`.
pub struct SliceSampler<F> {
    grid: Grid,
    exec: Execution,
    stride: f64,
    quantities: Vec<Quantity>,
    slices: Vec<SliceState<F>>,
    start: Option<f64>,
    last: Option<f64>,
    frames: i64,
}

impl<F: FieldRepr> SliceSampler<F> {
    /// Slices must lie inside the grid: `(s² - 1)/2` at most the grid extent.
    pub fn new(grid: &Grid, s_values: &[f64], quantities: Vec<Quantity>, stride: f64, exec: Execution) -> Result<Self> {
        if !(stride > 0.0) {
            return Err(Error::param("stride", "must be positive"));
        }
        if quantities.is_empty() {
            return Err(Error::param("quantities", "nothing to sample"));
        }
        let proto = F::from_native(grid, &vec![0.0; grid.len()], exec)?;
        let mut slices = Vec::with_capacity(s_values.len());
        for &s in s_values {
            if !(s > 1.0) {
                return Err(Error::param("s", format!("slices need s > 1, got {s}")));
            }
            if cone_radius(s) > grid.extent() {
                return Err(Error::param(
                    "s",
                    format!(
                        "cone section of s = {s} reaches r = {} beyond the grid extent {}",
                        cone_radius(s),
                        grid.extent()
                    ),
                ));
            }
            let geometry = SliceGeometry::new(&proto, s);
            let zero = SampledField { value: proto.zeros_like(), dt: proto.zeros_like(), grad: Vec::new() };
            let fields = quantities
                .iter()
                .map(|q| {
                    let mut f = zero.clone();
                    if q.gradient {
                        f.grad = vec![proto.zeros_like(); 3];
                    }
                    f
                })
                .collect();
            let n = proto.nodes();
            slices.push(SliceState {
                geometry,
                fields,
                interval: Vec::new(),
                got_lower: vec![false; n],
                got_upper: vec![false; n],
            });
        }
        Ok(Self { grid: grid.clone(), exec, stride, quantities, slices, start: None, last: None, frames: 0 })
    }

    fn locate(&mut self, start: f64) {
        let h = self.stride;
        for sl in &mut self.slices {
            sl.interval = sl
                .geometry
                .times
                .iter()
                .map(|t| {
                    let x = (t - start) / h;
                    let j = (x + 1e-12).floor();
                    let theta = x - j;
                    (j as i64, theta > 1e-12)
                })
                .collect();
        }
    }

    fn contributions(&self, sl: &SliceState<F>, k: i64, t_k: f64) -> (Vec<Contribution>, Vec<Contribution>) {
        let h = self.stride;
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for (i, &(j, _)) in sl.interval.iter().enumerate() {
            if !sl.geometry.mask[i] {
                continue;
            }
            let t = sl.geometry.times[i];
            if j == k {
                let (v, d) = hermite((t - t_k) / h, h);
                lower.push((i, v[0], v[1], d[0], d[1]));
            } else if j == k - 1 {
                let (v, d) = hermite((t - (t_k - h)) / h, h);
                upper.push((i, v[2], v[3], d[2], d[3]));
            }
        }
        (lower, upper)
    }

    fn jet_of(&self, frame: &Frame, q: &Quantity) -> Result<FieldJet<F>> {
        let base = if q.rhs {
            let (f, ft) = frame.source(q.comp);
            FieldJet::from_physical(&self.grid, frame.t, &[f, ft], self.exec)?
        } else {
            FieldJet::from_jet(&self.grid, frame.t, frame.jet(q.comp), self.exec)?
        };
        let out = base.apply_word(&q.word)?;
        if out.depth() < 2 {
            return Err(Error::param("word", format!("{} leaves no time derivative to interpolate", q.name())));
        }
        Ok(out)
    }

    fn add(&mut self, frame: &Frame) -> Result<()> {
        let start = *self.start.get_or_insert(frame.t);
        let k = ((frame.t - start) / self.stride).round() as i64;
        if (frame.t - start - k as f64 * self.stride).abs() > 1e-9 * self.stride.max(1.0) || k != self.frames {
            return Err(Error::param(
                "stride",
                format!("frame at t = {} is off the stride {} from {start}", frame.t, self.stride),
            ));
        }
        if k == 0 {
            self.locate(start);
        }
        self.frames += 1;
        self.last = Some(frame.t);

        let plans: Vec<_> = self.slices.iter().map(|sl| self.contributions(sl, k, frame.t)).collect();
        if plans.iter().all(|(l, u)| l.is_empty() && u.is_empty()) {
            return Ok(());
        }
        for (qi, q) in self.quantities.clone().iter().enumerate() {
            let jet = self.jet_of(frame, q)?;
            let grads: Vec<[F; 2]> = if q.gradient {
                (0..3).map(|a| [jet.levels[0].deriv(a), jet.levels[1].deriv(a)]).collect()
            } else {
                Vec::new()
            };
            for (sl, (lower, upper)) in self.slices.iter_mut().zip(&plans) {
                for part in [lower, upper] {
                    if part.is_empty() {
                        continue;
                    }
                    let wv: Vec<(usize, f64)> = part.iter().map(|c| (c.0, c.1)).collect();
                    let wr: Vec<(usize, f64)> = part.iter().map(|c| (c.0, c.2)).collect();
                    let f = &mut sl.fields[qi];
                    f.value.axpy_nodes(&wv, &jet.levels[0]);
                    f.value.axpy_nodes(&wr, &jet.levels[1]);
                    if jet.depth() >= 3 {
                        f.dt.axpy_nodes(&wv, &jet.levels[1]);
                        f.dt.axpy_nodes(&wr, &jet.levels[2]);
                    } else {
                        let dv: Vec<(usize, f64)> = part.iter().map(|c| (c.0, c.3)).collect();
                        let dr: Vec<(usize, f64)> = part.iter().map(|c| (c.0, c.4)).collect();
                        f.dt.axpy_nodes(&dv, &jet.levels[0]);
                        f.dt.axpy_nodes(&dr, &jet.levels[1]);
                    }
                    for (g, [g0, g1]) in f.grad.iter_mut().zip(&grads) {
                        g.axpy_nodes(&wv, g0);
                        g.axpy_nodes(&wr, g1);
                    }
                }
            }
        }
        for (sl, (lower, upper)) in self.slices.iter_mut().zip(&plans) {
            lower.iter().for_each(|c| sl.got_lower[c.0] = true);
            upper.iter().for_each(|c| sl.got_upper[c.0] = true);
        }
        Ok(())
    }

    /// Completed slices. A slice whose cone section is not fully inside the
    /// streamed window is an error.
    pub fn finish(self) -> Result<Vec<SliceSet<F>>> {
        let (start, end) = match (self.start, self.last) {
            (Some(a), Some(b)) => (a, b),
            _ => (f64::NAN, f64::NAN),
        };
        let mut out = Vec::with_capacity(self.slices.len());
        for sl in self.slices {
            let covered = (0..sl.geometry.times.len()).all(|i| {
                !sl.geometry.mask[i]
                    || (sl.interval.get(i).is_some_and(|x| x.0 >= 0)
                        && sl.got_lower[i]
                        && (sl.got_upper[i] || !sl.interval[i].1))
            });
            if !covered {
                return Err(Error::OutsideWindow { lo: sl.geometry.s, hi: sl.geometry.t_top(), start, end });
            }
            out.push(SliceSet { geometry: sl.geometry, quantities: self.quantities.clone(), fields: sl.fields });
        }
        Ok(out)
    }
}

impl<F: FieldRepr> FrameSink for SliceSampler<F> {
    fn accept(&mut self, _grid: &Grid, frame: &Frame) -> Result<()> {
        self.add(frame)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AngularField;
    use crate::propagator::Mass;
    use crate::system::data::{Bump, DataSpec};
    use crate::system::history::Jet;
    use crate::system::params::{Preset, SystemParams};
    use crate::system::solver::{solve_system, SolverConfig, Stepper, T0};

    #[test]
    fn frame_matrices_invert() {
        let m = frame_matrices(3.0, [0.0; 3]).unwrap();
        assert_eq!(m.identity_defect(), 0.0);
        assert_eq!(m.phi, m.psi);
        let m = frame_matrices(2.7, [0.3, -1.1, 2.0]).unwrap();
        assert!(m.identity_defect() <= 1e-14);
        assert_eq!(m.phi[2][0], -1.1 / 2.7);
        assert!(frame_matrices(0.0, [1.0, 0.0, 0.0]).is_err());
    }

    /// Frames of `φ(t, x) = p(t) g(r)` with `p` a polynomial.
    fn poly_frames(grid: &Grid, p: &[f64], g: &dyn Fn(f64) -> f64, t0: f64, h: f64, n: usize) -> Vec<Frame> {
        let Grid::Radial(rg) = grid else { unreachable!() };
        let prof: Vec<f64> = rg.nodes().iter().map(|r| g(*r)).collect();
        (0..n)
            .map(|k| {
                let t = t0 + k as f64 * h;
                let mut c = p.to_vec();
                let mut levels = Vec::new();
                for _ in 0..4 {
                    let a = c.iter().rev().fold(0.0, |s, x| s * t + x);
                    levels.push(grid.to_native(&prof.iter().map(|x| a * x).collect::<Vec<_>>()));
                    c = c.iter().enumerate().skip(1).map(|(i, x)| i as f64 * x).collect();
                }
                let zero = vec![0.0; grid.len()];
                Frame {
                    t,
                    u: Jet { levels: levels.clone() },
                    v: Jet { levels },
                    source: [zero.clone(), zero.clone()],
                    source_rate: [zero.clone(), zero],
                }
            })
            .collect()
    }

    #[test]
    fn cubic_in_time_is_reproduced() {
        // φ = t on the slice equals sqrt(s² + r²)
        let grid = Grid::radial(12.0, 128).unwrap();
        let frames = poly_frames(&grid, &[0.0, 1.0], &|_| 1.0, 2.0, 0.25, 40);
        let q = Quantity::field(Comp::U, Vec::new(), false);
        let mut sm = SliceSampler::<AngularField>::new(&grid, &[2.5, 3.5], vec![q.clone()], 0.25, Execution::Sequential)
            .unwrap();
        for f in &frames {
            sm.accept(&grid, f).unwrap();
        }
        for sl in sm.finish().unwrap() {
            let f = sl.get(&q).unwrap();
            for i in (0..f.value.nodes()).filter(|i| sl.geometry.mask[*i]) {
                let want = slice_time(sl.s(), f.value.node_radius(i));
                assert!((f.value.node_abs(i) - want).abs() < 1e-8);
                assert!(sl.geometry.times[i] < sl.geometry.t_top());
                assert!(f.value.node_radius(i) < sl.geometry.times[i] - 1.0);
            }
            // ∂_t φ = 1
            assert!((f.dt.node_abs(3) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_is_fourth_order() {
        let grid = Grid::radial(12.0, 128).unwrap();
        let g = |r: f64| (-r * r).exp();
        let exact = |t: f64| (0.7 * t).sin();
        let err = |h: f64| {
            let n = (4.0 / h) as usize + 1;
            let frames: Vec<Frame> = poly_frames(&grid, &[1.0], &g, 2.0, h, n)
                .into_iter()
                .map(|mut f| {
                    let Grid::Radial(rg) = &grid else { unreachable!() };
                    let w = 0.7f64;
                    let c = [exact(f.t), w * (w * f.t).cos(), -w * w * exact(f.t), -w * w * w * (w * f.t).cos()];
                    for (k, lv) in f.u.levels.iter_mut().enumerate() {
                        *lv = rg.reduce(&rg.nodes().iter().map(|r| c[k] * g(*r)).collect::<Vec<_>>());
                    }
                    f
                })
                .collect();
            let q = Quantity::field(Comp::U, Vec::new(), false);
            let mut sm = SliceSampler::<AngularField>::new(&grid, &[3.0], vec![q.clone()], h, Execution::Sequential)
                .unwrap();
            for f in &frames {
                sm.accept(&grid, f).unwrap();
            }
            let sl = sm.finish().unwrap().remove(0);
            let f = sl.get(&q).unwrap();
            (0..f.value.nodes())
                .filter(|i| sl.geometry.mask[*i])
                .map(|i| {
                    let r = f.value.node_radius(i);
                    (f.value.node_abs(i) - (exact(sl.geometry.times[i]) * g(r)).abs()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(0.4), err(0.2));
        assert!(a / b >= 8.0, "{a} {b}");
    }

    #[test]
    fn window_and_clip_errors() {
        let grid = Grid::radial(6.0, 64).unwrap();
        let q = vec![Quantity::field(Comp::U, Vec::new(), false)];
        // (s² - 1)/2 = 7.5 > 6
        assert!(SliceSampler::<AngularField>::new(&grid, &[4.0], q.clone(), 0.1, Execution::Sequential).is_err());
        let frames = poly_frames(&grid, &[1.0], &|r| (-r * r).exp(), 2.0, 0.25, 5);
        let mut sm = SliceSampler::<AngularField>::new(&grid, &[3.0], q, 0.25, Execution::Sequential).unwrap();
        for f in &frames {
            sm.accept(&grid, f).unwrap();
        }
        // the slice reaches t = 5 but frames stop at t = 3
        assert!(matches!(sm.finish(), Err(Error::OutsideWindow { .. })));
    }

    #[test]
    fn tangent_derivatives_vanish_on_hyperboloid_functions() {
        // φ = e^{-(t² - r²)²/200} is constant on each ℋ_s
        let grid = Grid::radial(12.0, 256).unwrap();
        let Grid::Radial(rg) = &grid else { unreachable!() };
        let h = 0.05;
        let q = Quantity::field(Comp::U, Vec::new(), true);
        let mut sm = SliceSampler::<AngularField>::new(&grid, &[2.5], vec![q.clone()], h, Execution::Sequential).unwrap();
        let f = |x: f64| (-x * x / 200.0).exp();
        let f1 = |x: f64| -x / 100.0 * f(x);
        let f2 = |x: f64| (-0.01 + x * x * 1e-4) * f(x);
        let f3 = |x: f64| (3e-4 * x - x.powi(3) * 1e-6) * f(x);
        for k in 0..60 {
            let t = 2.0 + k as f64 * h;
            // derivatives of f(t² - r²) in t
            let lv: Vec<Vec<f64>> = (0..4)
                .map(|l| {
                    rg.reduce(
                        &rg.nodes()
                            .iter()
                            .map(|r| {
                                let x = t * t - r * r;
                                match l {
                                    0 => f(x),
                                    1 => 2.0 * t * f1(x),
                                    2 => 2.0 * f1(x) + 4.0 * t * t * f2(x),
                                    _ => 12.0 * t * f2(x) + 8.0 * t.powi(3) * f3(x),
                                }
                            })
                            .collect::<Vec<_>>(),
                    )
                })
                .collect();
            let zero = vec![0.0; grid.len()];
            let frame = Frame {
                t,
                u: Jet { levels: lv.clone() },
                v: Jet { levels: lv },
                source: [zero.clone(), zero.clone()],
                source_rate: [zero.clone(), zero],
            };
            sm.accept(&grid, &frame).unwrap();
        }
        let sl = sm.finish().unwrap().remove(0);
        let sf = sl.get(&q).unwrap();
        let mask = &sl.geometry.mask;
        let scale = sf.grad[0].sup_abs_masked(Some(mask));
        for a in 0..3 {
            let u = sl.underline(sf, a).unwrap();
            assert!(u.sup_abs_masked(Some(mask)) < 1e-4 * scale, "{}", u.sup_abs_masked(Some(mask)));
        }
    }

    #[test]
    fn linear_energy_is_constant_across_slices() {
        let grid = Grid::radial(20.0, 256).unwrap();
        let params = SystemParams::linear(Mass::ONE);
        let dt = 0.01;
        let st = Stepper::new(&grid, &params, &Preset::Model, dt, Execution::Sequential).unwrap();
        let init = DataSpec::new(Bump::Poly { power: 6 }, 1.0, [1.0, 0.0, 1.0, 0.0]).initial_state(&grid, T0).unwrap();
        let q = Quantity::field(Comp::V, Vec::new(), true);
        let s_values = [2.5, 3.5, 4.5];
        let mut sm = SliceSampler::<AngularField>::new(&grid, &s_values, vec![q.clone()], 2.0 * dt, Execution::Sequential)
            .unwrap();
        solve_system(&st, &init, &SolverConfig::new(T0 + 9.0, 2.0 * dt), &mut [&mut sm]).unwrap();
        let energies: Vec<f64> = sm
            .finish()
            .unwrap()
            .iter()
            .map(|sl| {
                let f = sl.get(&q).unwrap();
                let w = sl.geometry.weights();
                let mut e = f.dt.inner_weighted(&f.dt, Some(&w)) + f.value.inner_weighted(&f.value, Some(&w));
                for a in 0..3 {
                    e += f.grad[a].inner_weighted(&f.grad[a], Some(&w));
                    let c = f.grad[a].mul_coord(a);
                    let inv: Vec<f64> = w.iter().zip(&sl.geometry.times).map(|(w, t)| w / t).collect();
                    e += 2.0 * f.dt.inner_weighted(&c, Some(&inv));
                }
                e
            })
            .collect();
        for e in &energies[1..] {
            assert!((e / energies[0] - 1.0).abs() < 1e-4, "{energies:?}");
        }
    }
}
