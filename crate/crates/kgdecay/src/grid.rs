//! Spatial grids and the transforms that diagonalize the Laplacian.
//!
//! Two discretizations are supported:
//!
//! * [`RadialGrid`]: spherically symmetric 3D fields stored as the reduced
//!   variable `w = r u` on the interior nodes `r_j = j R / (n + 1)`, with
//!   Dirichlet ends. The sine transform (DST-I) diagonalizes `d²/dr²`.
//! * [`BoxGrid`]: periodic cube `[-L, L)³`, diagonalized by the 3D FFT.
//!
//! Angular frequency convention everywhere: a mode `e^{i x·ξ}` (or
//! `sin(κ r)`) has Laplacian eigenvalue `-|ξ|²` (`-κ²`). No factors of 2π.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_finite, check_len, Error, Result};
use crate::par::Execution;

/// Radial grid for spherically symmetric fields in three dimensions.
#[derive(Clone)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGrid")
            .field("r_max", &self.r_max)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.r_max == other.r_max && self.n == other.n
    }
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::param("r_max", format!("must be positive, got {r_max}")));
        }
        if n < 8 {
            return Err(Error::param("n", format!("need at least 8 nodes, got {n}")));
        }
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Ok(Self { r_max, n, fft })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.r_max / (self.n + 1) as f64
    }

    /// Radius of node `j` (zero based, so `node(0) = h`).
    pub fn node(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Wavenumber of sine mode `k` (zero based): `(k + 1) π / R`.
    pub fn kappa(&self, k: usize) -> f64 {
        (k + 1) as f64 * PI / self.r_max
    }

    pub fn kappas(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.kappa(k)).collect()
    }

    /// Four trigonometric sums from one complex FFT of size `2(n+1)`:
    /// `Σ a_k sin`, `Σ a_k cos`, `Σ b_k sin`, `Σ b_k cos`, each with phase
    /// `π (k+1)(j+1)/(n+1)` and evaluated at every node `j`.
    fn trig_sums(&self, a: &[f64], b: &[f64]) -> [Vec<f64>; 4] {
        let n = self.n;
        let big = 2 * (n + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); big];
        for k in 0..n {
            buf[k + 1] = Complex64::new(a[k], b[k]);
        }
        self.fft.process(&mut buf);
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for j in 1..=n {
            let p = buf[j];
            let q = buf[big - j];
            out[0][j - 1] = 0.5 * (q.im - p.im);
            out[1][j - 1] = 0.5 * (p.re + q.re);
            out[2][j - 1] = 0.5 * (p.re - q.re);
            out[3][j - 1] = 0.5 * (p.im + q.im);
        }
        out
    }

    fn sine_sums(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let [sa, _, sb, _] = self.trig_sums(a, b);
        (sa, sb)
    }

    /// Sine coefficients `c_k` with `w_j = Σ_k c_k sin(κ_k r_j)`.
    pub fn forward(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, w.len())?;
        check_finite(w)?;
        let zero = vec![0.0; self.n];
        let (s, _) = self.sine_sums(w, &zero);
        let scale = 2.0 / (self.n + 1) as f64;
        Ok(s.into_iter().map(|x| x * scale).collect())
    }

    /// Forward transform of two fields with a single FFT.
    pub fn forward_pair(&self, a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len(self.n, a.len())?;
        check_len(self.n, b.len())?;
        check_finite(a)?;
        check_finite(b)?;
        let (mut sa, mut sb) = self.sine_sums(a, b);
        let scale = 2.0 / (self.n + 1) as f64;
        sa.iter_mut().chain(sb.iter_mut()).for_each(|x| *x *= scale);
        Ok((sa, sb))
    }

    pub fn inverse(&self, c: &[f64]) -> Vec<f64> {
        let zero = vec![0.0; self.n];
        self.sine_sums(c, &zero).0
    }

    pub fn inverse_pair(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.sine_sums(a, b)
    }

    /// Samples of `w` and `∂_r w` from sine coefficients.
    pub fn synth_with_slope(&self, c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let kc: Vec<f64> = c.iter().enumerate().map(|(k, x)| x * self.kappa(k)).collect();
        let [w, _, _, wr] = self.trig_sums(c, &kc);
        (w, wr)
    }

    /// Cosine series `Σ_k d_k cos(κ_k r_j)` at the nodes.
    pub fn cosine_sum(&self, d: &[f64]) -> Vec<f64> {
        let zero = vec![0.0; self.n];
        let [_, cs, _, _] = self.trig_sums(d, &zero);
        cs
    }

    /// `u(0) = lim w/r = ∂_r w(0) = Σ c_k κ_k`.
    pub fn origin_value(&self, c: &[f64]) -> f64 {
        c.iter().enumerate().map(|(k, x)| x * self.kappa(k)).sum()
    }

    /// `u = w / r` at the nodes.
    pub fn physical(&self, w: &[f64]) -> Vec<f64> {
        w.iter().enumerate().map(|(j, x)| x / self.node(j)).collect()
    }

    pub fn reduce(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(j, x)| x * self.node(j)).collect()
    }

    /// `∂_r u` at the nodes from the reduced samples `w`:
    /// `∂_r u = (∂_r w - w / r) / r`.
    pub fn radial_derivative(&self, w: &[f64]) -> Result<Vec<f64>> {
        let c = self.forward(w)?;
        Ok(self.radial_derivative_from_coeffs(&c))
    }

    pub fn radial_derivative_from_coeffs(&self, c: &[f64]) -> Vec<f64> {
        let (w, wr) = self.synth_with_slope(c);
        (0..self.n)
            .map(|j| {
                let r = self.node(j);
                (wr[j] - w[j] / r) / r
            })
            .collect()
    }
}

/// Periodic box `[-L, L)³` with `n` points per axis.
#[derive(Clone)]
pub struct BoxGrid {
    half_width: f64,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for BoxGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoxGrid")
            .field("half_width", &self.half_width)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for BoxGrid {
    fn eq(&self, other: &Self) -> bool {
        self.half_width == other.half_width && self.n == other.n
    }
}

pub const BOX_MAX_N: usize = 64;

impl BoxGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::param("half_width", format!("must be positive, got {half_width}")));
        }
        if n < 4 || n % 2 != 0 || n > BOX_MAX_N {
            return Err(Error::param(
                "n",
                format!("box grids need an even n in [4, {BOX_MAX_N}], got {n}"),
            ));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self { half_width, n, fwd, inv })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unindex(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    fn signed(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Angular wavenumber along one axis for FFT index `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        PI * self.signed(i) as f64 / self.half_width
    }

    fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    pub fn kappa_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let [i, j, k] = self.unindex(idx);
                let (a, b, c) = (self.wavenumber(i), self.wavenumber(j), self.wavenumber(k));
                a * a + b * b + c * c
            })
            .collect()
    }

    fn fft_axis(&self, data: &mut [Complex64], axis: usize, inverse: bool, exec: Execution) {
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        if axis == 2 {
            exec.for_chunks(data, n * n, |_, plane| {
                for line in plane.chunks_mut(n) {
                    plan.process(line);
                }
            });
            return;
        }
        // Gather lines along `axis` into contiguous storage, transform, scatter.
        let stride = if axis == 0 { n * n } else { n };
        let lines: Vec<usize> = (0..n * n)
            .map(|l| if axis == 0 { l } else { (l / n) * n * n + l % n })
            .collect();
        let mut tmp = vec![Complex64::new(0.0, 0.0); n * n * n];
        for (l, &base) in lines.iter().enumerate() {
            for i in 0..n {
                tmp[l * n + i] = data[base + i * stride];
            }
        }
        exec.for_chunks(&mut tmp, n * n, |_, block| {
            for line in block.chunks_mut(n) {
                plan.process(line);
            }
        });
        for (l, &base) in lines.iter().enumerate() {
            for i in 0..n {
                data[base + i * stride] = tmp[l * n + i];
            }
        }
    }

    fn fft3(&self, data: &mut [Complex64], inverse: bool, exec: Execution) {
        for axis in 0..3 {
            self.fft_axis(data, axis, inverse, exec);
        }
    }

    /// Fourier coefficients normalized so that `u(x) = Σ c_ξ e^{i ξ·(x + L)}`.
    pub fn forward(&self, u: &[f64], exec: Execution) -> Result<Vec<Complex64>> {
        check_len(self.len(), u.len())?;
        check_finite(u)?;
        let mut data: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft3(&mut data, false, exec);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
        Ok(data)
    }

    pub fn inverse(&self, c: &[Complex64], exec: Execution) -> Vec<f64> {
        let mut data = c.to_vec();
        self.fft3(&mut data, true, exec);
        data.into_iter().map(|z| z.re).collect()
    }

    /// Multiply by `i ξ_axis`, dropping the Nyquist mode (its derivative is
    /// not real-representable).
    pub fn derivative_coeffs(&self, c: &[Complex64], axis: usize) -> Vec<Complex64> {
        c.iter()
            .enumerate()
            .map(|(idx, &z)| {
                let i = self.unindex(idx)[axis];
                if self.is_nyquist(i) {
                    Complex64::new(0.0, 0.0)
                } else {
                    z * Complex64::new(0.0, self.wavenumber(i))
                }
            })
            .collect()
    }

    pub fn derivative(&self, u: &[f64], axis: usize, exec: Execution) -> Result<Vec<f64>> {
        if axis >= 3 {
            return Err(Error::AxisOutOfRange { axis, dims: 3 });
        }
        let c = self.forward(u, exec)?;
        Ok(self.inverse(&self.derivative_coeffs(&c, axis), exec))
    }

    pub fn laplacian(&self, u: &[f64], exec: Execution) -> Result<Vec<f64>> {
        let c = self.forward(u, exec)?;
        let k2 = self.kappa_sq();
        let lc: Vec<Complex64> = c.iter().zip(&k2).map(|(z, k)| -z * *k).collect();
        Ok(self.inverse(&lc, exec))
    }
}

/// Mode coefficients of one field.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralCoeffs {
    Sine(Vec<f64>),
    Fourier(Vec<Complex64>),
}

impl SpectralCoeffs {
    pub fn len(&self) -> usize {
        match self {
            SpectralCoeffs::Sine(c) => c.len(),
            SpectralCoeffs::Fourier(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros_like(&self) -> Self {
        match self {
            SpectralCoeffs::Sine(c) => SpectralCoeffs::Sine(vec![0.0; c.len()]),
            SpectralCoeffs::Fourier(c) => {
                SpectralCoeffs::Fourier(vec![Complex64::new(0.0, 0.0); c.len()])
            }
        }
    }

    /// `Σ |c_k|²` without normalization.
    pub fn sum_sq(&self) -> f64 {
        match self {
            SpectralCoeffs::Sine(c) => c.iter().map(|x| x * x).sum(),
            SpectralCoeffs::Fourier(c) => c.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// `self += a * other`. Panics on a variant or length mismatch, which is a
    /// programming error rather than bad input.
    pub fn axpy(&mut self, a: f64, other: &SpectralCoeffs) {
        match (self, other) {
            (SpectralCoeffs::Sine(x), SpectralCoeffs::Sine(y)) => {
                assert_eq!(x.len(), y.len());
                x.iter_mut().zip(y).for_each(|(p, q)| *p += a * q);
            }
            (SpectralCoeffs::Fourier(x), SpectralCoeffs::Fourier(y)) => {
                assert_eq!(x.len(), y.len());
                x.iter_mut().zip(y).for_each(|(p, q)| *p += q * a);
            }
            _ => panic!("axpy on mismatched coefficient kinds"),
        }
    }
}

/// Either grid, with the operations the rest of the crate needs.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Radial(RadialGrid),
    Box(BoxGrid),
}

impl Grid {
    pub fn radial(r_max: f64, n: usize) -> Result<Self> {
        RadialGrid::new(r_max, n).map(Grid::Radial)
    }

    pub fn cube(half_width: f64, n: usize) -> Result<Self> {
        BoxGrid::new(half_width, n).map(Grid::Box)
    }

    /// Number of stored samples (and of modes).
    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.n(),
            Grid::Box(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of independent spatial axes for [`Grid::spectral_derivative`].
    pub fn axes(&self) -> usize {
        match self {
            Grid::Radial(_) => 1,
            Grid::Box(_) => 3,
        }
    }

    pub fn spacing(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.h(),
            Grid::Box(g) => g.h(),
        }
    }

    /// Largest radius at which the grid still represents the solution
    /// faithfully (outer wall or box face).
    pub fn extent(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.r_max(),
            Grid::Box(g) => g.half_width(),
        }
    }

    /// `|x|` of sample `idx`.
    pub fn radius(&self, idx: usize) -> f64 {
        match self {
            Grid::Radial(g) => g.node(idx),
            Grid::Box(g) => {
                let p = g.position(idx);
                (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
            }
        }
    }

    /// Squared Laplacian eigenvalue root `κ²` per mode.
    pub fn kappa_sq(&self) -> Vec<f64> {
        match self {
            Grid::Radial(g) => g.kappas().into_iter().map(|k| k * k).collect(),
            Grid::Box(g) => g.kappa_sq(),
        }
    }

    pub fn forward(&self, native: &[f64]) -> Result<SpectralCoeffs> {
        self.forward_with(native, Execution::Sequential)
    }

    pub fn forward_with(&self, native: &[f64], exec: Execution) -> Result<SpectralCoeffs> {
        match self {
            Grid::Radial(g) => g.forward(native).map(SpectralCoeffs::Sine),
            Grid::Box(g) => g.forward(native, exec).map(SpectralCoeffs::Fourier),
        }
    }

    pub fn inverse(&self, c: &SpectralCoeffs) -> Vec<f64> {
        self.inverse_with(c, Execution::Sequential)
    }

    pub fn inverse_with(&self, c: &SpectralCoeffs, exec: Execution) -> Vec<f64> {
        match (self, c) {
            (Grid::Radial(g), SpectralCoeffs::Sine(c)) => g.inverse(c),
            (Grid::Box(g), SpectralCoeffs::Fourier(c)) => g.inverse(c, exec),
            _ => panic!("coefficient kind does not match grid"),
        }
    }

    /// Physical samples `u` from native ones (`w = r u` on radial grids).
    pub fn physical(&self, native: &[f64]) -> Vec<f64> {
        match self {
            Grid::Radial(g) => g.physical(native),
            Grid::Box(_) => native.to_vec(),
        }
    }

    pub fn to_native(&self, physical: &[f64]) -> Vec<f64> {
        match self {
            Grid::Radial(g) => g.reduce(physical),
            Grid::Box(_) => physical.to_vec(),
        }
    }

    /// Physical derivative `∂_axis u` at the samples. On radial grids the only
    /// axis is 0, meaning `∂_r`.
    pub fn spectral_derivative(&self, native: &[f64], axis: usize) -> Result<Vec<f64>> {
        self.spectral_derivative_with(native, axis, Execution::Sequential)
    }

    pub fn spectral_derivative_with(
        &self,
        native: &[f64],
        axis: usize,
        exec: Execution,
    ) -> Result<Vec<f64>> {
        match self {
            Grid::Radial(g) => {
                if axis != 0 {
                    return Err(Error::AxisOutOfRange { axis, dims: 1 });
                }
                g.radial_derivative(native)
            }
            Grid::Box(g) => g.derivative(native, axis, exec),
        }
    }

    /// 3D `L²` norm squared computed in physical space.
    pub fn norm_sq(&self, native: &[f64]) -> f64 {
        match self {
            Grid::Radial(g) => 4.0 * PI * g.h() * native.iter().map(|w| w * w).sum::<f64>(),
            Grid::Box(g) => g.h().powi(3) * native.iter().map(|u| u * u).sum::<f64>(),
        }
    }

    /// The same norm squared from coefficients (discrete Plancherel).
    pub fn coeff_norm_sq(&self, c: &SpectralCoeffs) -> f64 {
        match self {
            Grid::Radial(g) => 2.0 * PI * g.r_max() * c.sum_sq(),
            Grid::Box(g) => (2.0 * g.half_width()).powi(3) * c.sum_sq(),
        }
    }

    /// `sup |u|` including the recovered origin value on radial grids.
    pub fn sup_abs(&self, native: &[f64]) -> f64 {
        match self {
            Grid::Radial(g) => {
                let c = g.forward(native).unwrap_or_else(|_| vec![f64::NAN; g.n()]);
                let origin = g.origin_value(&c).abs();
                g.physical(native).iter().fold(origin, |m, x| m.max(x.abs()))
            }
            Grid::Box(_) => native.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// Quadrature weight of sample `idx` for 3D integrals of physical
    /// quantities (the `4π r²` shell factor is included on radial grids).
    pub fn weight(&self, idx: usize) -> f64 {
        match self {
            Grid::Radial(g) => {
                let r = g.node(idx);
                4.0 * PI * r * r * g.h()
            }
            Grid::Box(g) => g.h().powi(3),
        }
    }
}

/// A field sample and its time derivative, stored in native form.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldPair {
    pub value: Vec<f64>,
    pub rate: Vec<f64>,
}

impl FieldPair {
    pub fn new(value: Vec<f64>, rate: Vec<f64>) -> Result<Self> {
        check_len(value.len(), rate.len())?;
        check_finite(&value)?;
        check_finite(&rate)?;
        Ok(Self { value, rate })
    }

    pub fn zeros(len: usize) -> Self {
        Self { value: vec![0.0; len], rate: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn single_sine_mode_has_one_coefficient() {
        let g = RadialGrid::new(7.0, 63).unwrap();
        let w: Vec<f64> = g.nodes().iter().map(|r| (PI * r / 7.0).sin()).collect();
        let c = g.forward(&w).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-13);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn zero_field_zero_coefficients() {
        let g = Grid::radial(3.0, 32).unwrap();
        assert_eq!(g.forward(&vec![0.0; 32]).unwrap(), SpectralCoeffs::Sine(vec![0.0; 32]));
        let b = Grid::cube(2.0, 8).unwrap();
        assert!(b.forward(&vec![0.0; 512]).unwrap().sum_sq() == 0.0);
    }

    #[test]
    fn rejects_non_finite_and_bad_sizes() {
        let g = Grid::radial(3.0, 16).unwrap();
        let mut w = vec![0.0; 16];
        w[5] = f64::NAN;
        assert!(matches!(g.forward(&w), Err(Error::NonFinite { index: 5 })));
        assert!(matches!(g.forward(&[0.0; 3]), Err(Error::GridMismatch { .. })));
        assert!(RadialGrid::new(-1.0, 16).is_err());
        assert!(RadialGrid::new(1.0, 4).is_err());
        assert!(BoxGrid::new(1.0, 7).is_err());
        assert!(matches!(g.spectral_derivative(&[0.0; 16], 1), Err(Error::AxisOutOfRange { .. })));
    }

    #[test]
    fn plancherel_and_round_trip_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for grid in [Grid::radial(5.0, 200).unwrap(), Grid::cube(3.0, 16).unwrap()] {
            let f: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = grid.forward(&f).unwrap();
            assert!(rel(grid.norm_sq(&f), grid.coeff_norm_sq(&c)) < 1e-12);
            let back = grid.inverse(&c);
            let err = f.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn radial_derivative_matches_closed_form() {
        let r_max = 10.0;
        let g = RadialGrid::new(r_max, 127).unwrap();
        let k = PI / r_max;
        let w: Vec<f64> = g.nodes().iter().map(|r| (k * r).sin()).collect();
        let du = g.radial_derivative(&w).unwrap();
        for (j, r) in g.nodes().iter().enumerate() {
            let exact = (k * r * (k * r).cos() - (k * r).sin()) / (r * r);
            assert!((du[j] - exact).abs() < 1e-8, "node {j}");
        }
        let c = g.forward(&w).unwrap();
        assert!((g.origin_value(&c) - k).abs() < 1e-12);
    }

    #[test]
    fn box_derivatives_commute_and_kill_constants() {
        let b = BoxGrid::new(PI, 16).unwrap();
        let ex = Execution::Sequential;
        let c = vec![2.5; b.len()];
        assert!(b.derivative(&c, 1, ex).unwrap().iter().all(|x| x.abs() < 1e-13));
        let f: Vec<f64> = (0..b.len())
            .map(|i| {
                let [x, y, z] = b.position(i);
                (x + 2.0 * y).sin() * (z.cos() + 0.3 * (2.0 * x).cos())
            })
            .collect();
        let fxy = b.derivative(&b.derivative(&f, 0, ex).unwrap(), 1, ex).unwrap();
        let fyx = b.derivative(&b.derivative(&f, 1, ex).unwrap(), 0, ex).unwrap();
        assert!(fxy.iter().zip(&fyx).all(|(a, b)| (a - b).abs() < 1e-12));
        let fx = b.derivative(&f, 0, Execution::Parallel).unwrap();
        for (i, v) in fx.iter().enumerate() {
            let [x, y, z] = b.position(i);
            let exact = (x + 2.0 * y).cos() * (z.cos() + 0.3 * (2.0 * x).cos())
                - (x + 2.0 * y).sin() * 0.6 * (2.0 * x).sin();
            assert!((v - exact).abs() < 1e-10);
        }
    }
}
