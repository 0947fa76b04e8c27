//! Output frames, streaming sinks, and an in-memory history with cubic
//! Hermite interpolation in time.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::system::poly::Comp;

/// Number of stored time levels per component: `φ, ∂_t φ, ∂_t² φ, ∂_t³ φ`.
pub const JET_LEVELS: usize = 4;

/// Time derivatives of one component at a frame, in native samples. Levels
/// two and three come from the equation of motion, not from differencing.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub levels: Vec<Vec<f64>>,
}

impl Jet {
    pub fn zeros(len: usize) -> Self {
        Self { levels: vec![vec![0.0; len]; JET_LEVELS] }
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn add_scaled(&mut self, a: f64, other: &Jet) {
        for (x, y) in self.levels.iter_mut().zip(&other.levels) {
            x.iter_mut().zip(y).for_each(|(p, q)| *p += a * q);
        }
    }
}

/// One output frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub u: Jet,
    pub v: Jet,
    /// Physical right-hand sides `(F_u, F_v)` at `t`.
    pub source: [Vec<f64>; 2],
    /// Their time derivatives.
    pub source_rate: [Vec<f64>; 2],
}

impl Frame {
    pub fn jet(&self, comp: Comp) -> &Jet {
        match comp {
            Comp::U => &self.u,
            Comp::V => &self.v,
        }
    }

    pub fn source(&self, comp: Comp) -> (&[f64], &[f64]) {
        let i = comp as usize;
        (&self.source[i], &self.source_rate[i])
    }
}

/// Consumer of frames as a run progresses.
pub trait FrameSink {
    fn accept(&mut self, grid: &Grid, frame: &Frame) -> Result<()>;
}

impl<F: FnMut(&Grid, &Frame) -> Result<()>> FrameSink for F {
    fn accept(&mut self, grid: &Grid, frame: &Frame) -> Result<()> {
        self(grid, frame)
    }
}

/// Cubic Hermite basis weights `(h00, h10, h01, h11)` on `[t0, t1]`, with the
/// derivative weights already multiplied by the interval length.
pub fn hermite_weights(t0: f64, t1: f64, t: f64) -> [f64; 4] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    [
        2.0 * s3 - 3.0 * s2 + 1.0,
        (s3 - 2.0 * s2 + s) * h,
        -2.0 * s3 + 3.0 * s2,
        (s3 - s2) * h,
    ]
}

/// In-memory sequence of frames at a uniform stride.
#[derive(Clone, Debug, Default)]
pub struct History {
    pub stride: f64,
    pub frames: Vec<Frame>,
}

impl History {
    pub fn new(stride: f64) -> Self {
        Self { stride, frames: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    pub fn window(&self) -> Option<(f64, f64)> {
        Some((self.frames.first()?.t, self.frames.last()?.t))
    }

    /// Index `i` with `t_i <= t <= t_{i+1}`.
    pub fn bracket(&self, t: f64) -> Result<usize> {
        let (start, end) = self.window().ok_or(Error::OutsideWindow {
            lo: t,
            hi: t,
            start: f64::NAN,
            end: f64::NAN,
        })?;
        let tol = 1e-9 * self.stride.max(1.0);
        if t < start - tol || t > end + tol || self.frames.len() < 2 {
            return Err(Error::OutsideWindow { lo: t, hi: t, start, end });
        }
        let i = ((t - start) / self.stride).floor().max(0.0) as usize;
        Ok(i.min(self.frames.len() - 2))
    }

    /// Hermite interpolation of time level `level` (0..=2) of one component.
    pub fn interpolate(&self, t: f64, comp: Comp, level: usize) -> Result<Vec<f64>> {
        assert!(level + 1 < JET_LEVELS, "level {level} has no stored derivative");
        let i = self.bracket(t)?;
        let (a, b) = (&self.frames[i], &self.frames[i + 1]);
        let w = hermite_weights(a.t, b.t, t);
        let (ja, jb) = (a.jet(comp), b.jet(comp));
        let (y0, d0, y1, d1) =
            (ja.level(level), ja.level(level + 1), jb.level(level), jb.level(level + 1));
        Ok((0..y0.len())
            .map(|j| w[0] * y0[j] + w[1] * d0[j] + w[2] * y1[j] + w[3] * d1[j])
            .collect())
    }
}

impl FrameSink for History {
    fn accept(&mut self, _grid: &Grid, frame: &Frame) -> Result<()> {
        if let Some(last) = self.frames.last() {
            let gap = frame.t - last.t;
            if (gap - self.stride).abs() > 1e-9 * self.stride.max(1.0) {
                return Err(Error::param(
                    "history",
                    format!("frame spacing {gap} differs from stride {}", self.stride),
                ));
            }
        }
        self.frames.push(frame.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: f64, f: impl Fn(f64) -> [f64; 4]) -> Frame {
        let lv = f(t);
        let jet = Jet { levels: lv.iter().map(|x| vec![*x; 3]).collect() };
        Frame {
            t,
            u: jet.clone(),
            v: jet,
            source: [vec![0.0; 3], vec![0.0; 3]],
            source_rate: [vec![0.0; 3], vec![0.0; 3]],
        }
    }

    #[test]
    fn cubic_reproduced_exactly() {
        let f = |t: f64| [t * t * t - t, 3.0 * t * t - 1.0, 6.0 * t, 6.0];
        let g = Grid::radial(1.0, 8).unwrap();
        let mut h = History::new(0.5);
        for k in 0..5 {
            h.accept(&g, &frame(2.0 + 0.5 * k as f64, f)).unwrap();
        }
        for &t in &[2.1, 2.75, 3.9] {
            let v = h.interpolate(t, Comp::U, 0).unwrap();
            assert!((v[1] - f(t)[0]).abs() < 1e-12);
            let d = h.interpolate(t, Comp::V, 1).unwrap();
            assert!((d[0] - f(t)[1]).abs() < 1e-12);
        }
        assert!(h.interpolate(1.0, Comp::U, 0).is_err());
        assert!(h.accept(&g, &frame(10.0, f)).is_err());
    }

    #[test]
    fn interpolation_error_is_fourth_order() {
        let f = |t: f64| [t.sin(), t.cos(), -t.sin(), -t.cos()];
        let g = Grid::radial(1.0, 8).unwrap();
        let err = |stride: f64| {
            let mut h = History::new(stride);
            let n = (2.0 / stride) as usize;
            for k in 0..=n {
                h.accept(&g, &frame(2.0 + stride * k as f64, f)).unwrap();
            }
            (0..200)
                .map(|i| 2.0 + 1.99 * i as f64 / 200.0)
                .map(|t| (h.interpolate(t, Comp::U, 0).unwrap()[0] - t.sin()).abs())
                .fold(0.0, f64::max)
        };
        assert!(err(0.2) / err(0.1) > 8.0);
    }
}
