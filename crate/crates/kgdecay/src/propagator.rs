//! Exact-in-time linear Klein-Gordon flow in mode space.
//!
//! Each mode obeys `c'' + ω² c = f̂` with `ω = sqrt(κ² + m²)`, so the
//! homogeneous flow is a rotation and a forced step is a midpoint
//! quadrature of the Duhamel integral.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::{FieldPair, Grid, SpectralCoeffs};

/// Mass parameter restricted to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Mass(f64);

impl Mass {
    pub const ZERO: Mass = Mass(0.0);
    pub const ONE: Mass = Mass(1.0);

    pub fn new(m: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&m) {
            Ok(Mass(m))
        } else {
            Err(Error::param("m", format!("mass must lie in [0, 1], got {m}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Mass {
    type Error = Error;
    fn try_from(m: f64) -> Result<Self> {
        Mass::new(m)
    }
}

impl From<Mass> for f64 {
    fn from(m: Mass) -> f64 {
        m.0
    }
}

/// `ω(k) = sqrt(κ_k² + m²)` for every mode of the grid.
pub fn multiplier_omega(grid: &Grid, m: Mass) -> Vec<f64> {
    let m2 = m.0 * m.0;
    grid.kappa_sq().into_iter().map(|k2| (k2 + m2).sqrt()).collect()
}

/// Largest `ω` over the grid, used for the step-size bound.
pub fn omega_max(grid: &Grid, m: Mass) -> f64 {
    multiplier_omega(grid, m).into_iter().fold(0.0, f64::max)
}

/// Precomputed per-mode rotation for a fixed step.
#[derive(Clone, Debug)]
pub struct Rotation {
    cos: Vec<f64>,
    sin_over: Vec<f64>,
    minus_sin_times: Vec<f64>,
}

impl Rotation {
    pub fn new(omega: &[f64], dt: f64) -> Self {
        let mut cos = Vec::with_capacity(omega.len());
        let mut sin_over = Vec::with_capacity(omega.len());
        let mut minus_sin_times = Vec::with_capacity(omega.len());
        for &w in omega {
            if w == 0.0 {
                // massless zero mode: c(t) = c + t c'
                cos.push(1.0);
                sin_over.push(dt);
                minus_sin_times.push(0.0);
            } else {
                let (s, c) = (w * dt).sin_cos();
                cos.push(c);
                sin_over.push(s / w);
                minus_sin_times.push(-w * s);
            }
        }
        Self { cos, sin_over, minus_sin_times }
    }

    pub fn len(&self) -> usize {
        self.cos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cos.is_empty()
    }

    fn apply_slice<T>(&self, c: &mut [T], ct: &mut [T])
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        for k in 0..c.len() {
            let (a, b) = (c[k], ct[k]);
            c[k] = a * self.cos[k] + b * self.sin_over[k];
            ct[k] = a * self.minus_sin_times[k] + b * self.cos[k];
        }
    }

    pub fn apply(&self, c: &mut SpectralCoeffs, ct: &mut SpectralCoeffs) {
        match (c, ct) {
            (SpectralCoeffs::Sine(a), SpectralCoeffs::Sine(b)) => self.apply_slice::<f64>(a, b),
            (SpectralCoeffs::Fourier(a), SpectralCoeffs::Fourier(b)) => {
                self.apply_slice::<Complex64>(a, b)
            }
            _ => panic!("rotation applied to mismatched coefficient kinds"),
        }
    }

    /// Add the response of a zero state to a rate impulse `ĝ`: `(sin/ω ĝ, cos ĝ)`.
    pub fn apply_impulse(&self, g: &SpectralCoeffs, c: &mut SpectralCoeffs, ct: &mut SpectralCoeffs) {
        match (g, c, ct) {
            (SpectralCoeffs::Sine(g), SpectralCoeffs::Sine(a), SpectralCoeffs::Sine(b)) => {
                for k in 0..g.len() {
                    a[k] += g[k] * self.sin_over[k];
                    b[k] += g[k] * self.cos[k];
                }
            }
            (SpectralCoeffs::Fourier(g), SpectralCoeffs::Fourier(a), SpectralCoeffs::Fourier(b)) => {
                for k in 0..g.len() {
                    a[k] += g[k] * self.sin_over[k];
                    b[k] += g[k] * self.cos[k];
                }
            }
            _ => panic!("impulse applied to mismatched coefficient kinds"),
        }
    }
}

/// A field pair in mode space.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalPair {
    pub c: SpectralCoeffs,
    pub ct: SpectralCoeffs,
}

impl ModalPair {
    pub fn from_fields(grid: &Grid, pair: &FieldPair) -> Result<Self> {
        check_len(grid.len(), pair.len())?;
        Ok(Self { c: grid.forward(&pair.value)?, ct: grid.forward(&pair.rate)? })
    }

    pub fn to_fields(&self, grid: &Grid) -> FieldPair {
        FieldPair { value: grid.inverse(&self.c), rate: grid.inverse(&self.ct) }
    }

    pub fn zeros_like(&self) -> Self {
        Self { c: self.c.zeros_like(), ct: self.ct.zeros_like() }
    }

    pub fn axpy(&mut self, a: f64, other: &ModalPair) {
        self.c.axpy(a, &other.c);
        self.ct.axpy(a, &other.ct);
    }
}

/// Flat energy `‖∂_t φ‖² + ‖∇φ‖² + m²‖φ‖²` of a modal pair. Conserved
/// exactly by the rotation.
pub fn flat_energy_modal(grid: &Grid, pair: &ModalPair, m: Mass) -> f64 {
    let om = multiplier_omega(grid, m);
    let raw: f64 = match (&pair.c, &pair.ct) {
        (SpectralCoeffs::Sine(c), SpectralCoeffs::Sine(ct)) => (0..c.len())
            .map(|k| ct[k] * ct[k] + om[k] * om[k] * c[k] * c[k])
            .sum(),
        (SpectralCoeffs::Fourier(c), SpectralCoeffs::Fourier(ct)) => (0..c.len())
            .map(|k| ct[k].norm_sqr() + om[k] * om[k] * c[k].norm_sqr())
            .sum(),
        _ => panic!("mismatched coefficient kinds"),
    };
    match grid {
        Grid::Radial(g) => 2.0 * std::f64::consts::PI * g.r_max() * raw,
        Grid::Box(g) => (2.0 * g.half_width()).powi(3) * raw,
    }
}

/// Exact homogeneous evolution by `dt` (any sign).
pub fn evolve_homogeneous(grid: &Grid, state: &FieldPair, m: Mass, dt: f64) -> Result<FieldPair> {
    if !dt.is_finite() {
        return Err(Error::param("dt", "must be finite"));
    }
    let mut modal = ModalPair::from_fields(grid, state)?;
    Rotation::new(&multiplier_omega(grid, m), dt).apply(&mut modal.c, &mut modal.ct);
    Ok(modal.to_fields(grid))
}

/// One forced step: midpoint quadrature of the Duhamel integral,
/// `E(dt/2) ∘ (rate += dt f_mid) ∘ E(dt/2)`. `f_mid` holds physical source
/// samples at the interval midpoint.
pub fn duhamel_step(
    grid: &Grid,
    state: &FieldPair,
    f_mid: &[f64],
    m: Mass,
    dt: f64,
) -> Result<FieldPair> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    check_len(grid.len(), f_mid.len())?;
    let mut modal = ModalPair::from_fields(grid, state)?;
    let half = Rotation::new(&multiplier_omega(grid, m), 0.5 * dt);
    half.apply(&mut modal.c, &mut modal.ct);
    let fhat = grid.forward(&grid.to_native(f_mid))?;
    modal.ct.axpy(dt, &fhat);
    half.apply(&mut modal.c, &mut modal.ct);
    Ok(modal.to_fields(grid))
}
