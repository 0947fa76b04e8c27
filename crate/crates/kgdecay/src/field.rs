//! Spatial field representations that vector fields can act on.
//!
//! Radial solutions stop being radial once `∂_a`, `L_a` or `Ω_ab` act on
//! them, so radial grids use [`AngularField`]: a finite sum
//! `Σ_α x̂^α g_α(r)` of unit-vector monomials times radial profiles. Box grids
//! use plain Cartesian samples ([`BoxField`]). Both implement [`FieldRepr`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::grid::{BoxGrid, Grid, RadialGrid};
use crate::par::Execution;

/// Operations the diagnostics need from a spatial field at one time.
pub trait FieldRepr: Clone + Debug + Send + Sync {
    /// Physical field from native samples of `grid`.
    fn from_native(grid: &Grid, native: &[f64], exec: Execution) -> Result<Self>;
    fn nodes(&self) -> usize;
    /// `|x|` at node `i` (radial nodes stand for whole spheres).
    fn node_radius(&self, i: usize) -> f64;
    fn zeros_like(&self) -> Self;
    fn axpy(&mut self, a: f64, x: &Self);
    fn scale(&mut self, a: f64);
    /// Multiply by a per-node scalar.
    fn scale_nodes(&mut self, w: &[f64]);
    /// `self[i] += w · x[i]` for each listed `(i, w)`.
    fn axpy_nodes(&mut self, w: &[(usize, f64)], x: &Self);
    /// Multiply by `x̂_a = x^a / |x|`.
    fn mul_unit(&self, axis: usize) -> Self;
    /// Multiply by `x^a`.
    fn mul_coord(&self, axis: usize) -> Self {
        let mut f = self.mul_unit(axis);
        let r: Vec<f64> = (0..f.nodes()).map(|i| f.node_radius(i)).collect();
        f.scale_nodes(&r);
        f
    }
    /// `∂_a`.
    fn deriv(&self, axis: usize) -> Self;
    /// `∫ w φ ψ dx`, with `w` per node (all ones when `None`).
    fn inner_weighted(&self, other: &Self, w: Option<&[f64]>) -> f64;
    fn inner(&self, other: &Self) -> f64 {
        self.inner_weighted(other, None)
    }
    fn norm_sq(&self) -> f64 {
        self.inner(self)
    }
    /// `sup |φ|` over the nodes listed by `mask` (all when `None`).
    fn sup_abs_masked(&self, mask: Option<&[bool]>) -> f64;
    fn sup_abs(&self) -> f64 {
        self.sup_abs_masked(None)
    }
    /// `|φ|` at node `i`; the largest sampled direction for angular fields.
    fn node_abs(&self, i: usize) -> f64;
    fn laplacian(&self) -> Self {
        let mut out = self.zeros_like();
        for a in 0..3 {
            out.axpy(1.0, &self.deriv(a).deriv(a));
        }
        out
    }
}

/// Exponents `(a, b, c)` of `x̂₁^a x̂₂^b x̂₃^c`.
pub type Monomial = [u8; 3];

fn double_factorial(k: i64) -> f64 {
    let mut out = 1.0;
    let mut j = k;
    while j > 1 {
        out *= j as f64;
        j -= 2;
    }
    out
}

/// Average of `x̂^α` over the unit sphere:
/// `(2a-1)!!(2b-1)!!(2c-1)!! / (2(a+b+c)+1)!!` for even exponents `2a, 2b, 2c`.
pub fn sphere_mean(m: Monomial) -> f64 {
    if m.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let h = m.map(|e| (e / 2) as i64);
    let num: f64 = h.iter().map(|&k| double_factorial(2 * k - 1)).product();
    num / double_factorial(2 * (h[0] + h[1] + h[2]) + 1)
}

fn add_mono(a: Monomial, b: Monomial) -> Monomial {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn degree(m: Monomial) -> u8 {
    m[0] + m[1] + m[2]
}

/// Directions used for sup norms of non-radial angular fields: the six axis
/// points, the eight cube diagonals, and a 48-point Fibonacci sphere.
fn sample_directions() -> Vec<[f64; 3]> {
    let mut dirs = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let d = 1.0 / 3f64.sqrt();
    for sx in [-d, d] {
        for sy in [-d, d] {
            for sz in [-d, d] {
                dirs.push([sx, sy, sz]);
            }
        }
    }
    let n = 48;
    let golden = PI * (3.0 - 5f64.sqrt());
    for i in 0..n {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let rho = (1.0 - z * z).sqrt();
        let phi = golden * i as f64;
        dirs.push([rho * phi.cos(), rho * phi.sin(), z]);
    }
    dirs
}

/// `Σ_α x̂^α g_α(r)` on a radial grid; `g_α` are physical samples at the
/// interior nodes. Profiles multiplying a monomial of degree `d` are taken to
/// have the parity of `d` in `r`, which fixes how they are differentiated.
#[derive(Clone, Debug)]
pub struct AngularField {
    grid: RadialGrid,
    terms: BTreeMap<Monomial, Vec<f64>>,
}

impl AngularField {
    pub fn radial(grid: &RadialGrid, profile: Vec<f64>) -> Result<Self> {
        if profile.len() != grid.n() {
            return Err(Error::GridMismatch { expected: grid.n(), found: profile.len() });
        }
        let mut terms = BTreeMap::new();
        terms.insert([0, 0, 0], profile);
        Ok(Self { grid: grid.clone(), terms })
    }

    pub fn from_terms(grid: &RadialGrid, terms: Vec<(Monomial, Vec<f64>)>) -> Result<Self> {
        let mut f = Self { grid: grid.clone(), terms: BTreeMap::new() };
        for (m, g) in terms {
            if g.len() != grid.n() {
                return Err(Error::GridMismatch { expected: grid.n(), found: g.len() });
            }
            f.add_term(m, 1.0, &g);
        }
        Ok(f)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Vec<f64>)> {
        self.terms.iter()
    }

    fn add_term(&mut self, m: Monomial, a: f64, g: &[f64]) {
        let n = g.len();
        let slot = self.terms.entry(m).or_insert_with(|| vec![0.0; n]);
        slot.iter_mut().zip(g).for_each(|(x, y)| *x += a * y);
    }

    /// Value at node `i` in direction `dir` (a unit vector).
    pub fn eval(&self, i: usize, dir: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(m, g)| {
                g[i] * dir[0].powi(m[0] as i32) * dir[1].powi(m[1] as i32) * dir[2].powi(m[2] as i32)
            })
            .sum()
    }

    fn is_radial(&self) -> bool {
        self.terms.keys().all(|m| *m == [0, 0, 0])
    }

    /// `(g, g')` for a profile of the given parity.
    fn profile_slope(&self, g: &[f64], even: bool) -> (Vec<f64>, Vec<f64>) {
        let grid = &self.grid;
        if even {
            let w = grid.reduce(g);
            let c = grid.forward(&w).expect("finite profile");
            let (_, wr) = grid.synth_with_slope(&c);
            let d = (0..grid.n()).map(|j| (wr[j] - g[j]) / grid.node(j)).collect();
            (g.to_vec(), d)
        } else {
            let c = grid.forward(g).expect("finite profile");
            grid.synth_with_slope(&c)
        }
    }
}

impl FieldRepr for AngularField {
    fn from_native(grid: &Grid, native: &[f64], _exec: Execution) -> Result<Self> {
        match grid {
            Grid::Radial(g) => Self::radial(g, g.physical(native)),
            Grid::Box(_) => Err(Error::Unsupported("angular fields live on radial grids".into())),
        }
    }

    fn nodes(&self) -> usize {
        self.grid.n()
    }

    fn node_radius(&self, i: usize) -> f64 {
        self.grid.node(i)
    }

    fn zeros_like(&self) -> Self {
        Self { grid: self.grid.clone(), terms: BTreeMap::new() }
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        for (m, g) in &x.terms {
            self.add_term(*m, a, g);
        }
    }

    fn scale(&mut self, a: f64) {
        for g in self.terms.values_mut() {
            g.iter_mut().for_each(|x| *x *= a);
        }
    }

    fn scale_nodes(&mut self, w: &[f64]) {
        for g in self.terms.values_mut() {
            g.iter_mut().zip(w).for_each(|(x, y)| *x *= y);
        }
    }

    fn axpy_nodes(&mut self, w: &[(usize, f64)], x: &Self) {
        let n = self.grid.n();
        for (m, g) in &x.terms {
            let slot = self.terms.entry(*m).or_insert_with(|| vec![0.0; n]);
            for &(i, a) in w {
                slot[i] += a * g[i];
            }
        }
    }

    fn mul_unit(&self, axis: usize) -> Self {
        let mut out = self.zeros_like();
        let mut e = [0u8; 3];
        e[axis] = 1;
        for (m, g) in &self.terms {
            out.add_term(add_mono(*m, e), 1.0, g);
        }
        out
    }

    fn deriv(&self, axis: usize) -> Self {
        // ∂_c(x̂^α g) = x̂^{α+e_c}(g' - |α| g/r) + α_c x̂^{α-e_c} g/r
        let mut out = self.zeros_like();
        let n = self.grid.n();
        let r: Vec<f64> = (0..n).map(|j| self.grid.node(j)).collect();
        for (m, g) in &self.terms {
            let d = degree(*m);
            let (_, gp) = self.profile_slope(g, d % 2 == 0);
            let mut up = *m;
            up[axis] += 1;
            let t: Vec<f64> = (0..n).map(|j| gp[j] - d as f64 * g[j] / r[j]).collect();
            out.add_term(up, 1.0, &t);
            if m[axis] > 0 {
                let mut down = *m;
                down[axis] -= 1;
                let t: Vec<f64> = (0..n).map(|j| m[axis] as f64 * g[j] / r[j]).collect();
                out.add_term(down, 1.0, &t);
            }
        }
        out
    }

    fn inner_weighted(&self, other: &Self, w: Option<&[f64]>) -> f64 {
        let h = self.grid.h();
        let mut total = 0.0;
        for (ma, ga) in &self.terms {
            for (mb, gb) in &other.terms {
                let mean = sphere_mean(add_mono(*ma, *mb));
                if mean == 0.0 {
                    continue;
                }
                let s: f64 = (0..ga.len())
                    .map(|j| {
                        let r = self.grid.node(j);
                        let wj = w.map_or(1.0, |w| w[j]);
                        wj * r * r * ga[j] * gb[j]
                    })
                    .sum();
                total += mean * s;
            }
        }
        4.0 * PI * h * total
    }

    fn node_abs(&self, i: usize) -> f64 {
        if self.is_radial() {
            return self.terms.get(&[0, 0, 0]).map_or(0.0, |g| g[i].abs());
        }
        sample_directions().iter().fold(0.0, |a, d| a.max(self.eval(i, *d).abs()))
    }

    fn sup_abs_masked(&self, mask: Option<&[bool]>) -> f64 {
        let keep = |j: usize| mask.map_or(true, |m| m[j]);
        if self.is_radial() {
            return match self.terms.get(&[0, 0, 0]) {
                Some(g) => (0..g.len()).filter(|j| keep(*j)).fold(0.0, |a, j| a.max(g[j].abs())),
                None => 0.0,
            };
        }
        let dirs = sample_directions();
        (0..self.grid.n())
            .filter(|j| keep(*j))
            .flat_map(|j| dirs.iter().map(move |d| (j, *d)))
            .fold(0.0f64, |a, (j, d)| a.max(self.eval(j, d).abs()))
    }
}

/// Cartesian samples on a periodic box.
#[derive(Clone, Debug)]
pub struct BoxField {
    grid: BoxGrid,
    exec: Execution,
    pub data: Vec<f64>,
}

impl BoxField {
    pub fn new(grid: &BoxGrid, data: Vec<f64>, exec: Execution) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), found: data.len() });
        }
        Ok(Self { grid: grid.clone(), exec, data })
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }
}

impl FieldRepr for BoxField {
    fn from_native(grid: &Grid, native: &[f64], exec: Execution) -> Result<Self> {
        match grid {
            Grid::Box(g) => Self::new(g, native.to_vec(), exec),
            Grid::Radial(_) => Err(Error::Unsupported("box fields live on box grids".into())),
        }
    }

    fn nodes(&self) -> usize {
        self.data.len()
    }

    fn node_radius(&self, i: usize) -> f64 {
        let p = self.grid.position(i);
        (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
    }

    fn zeros_like(&self) -> Self {
        Self { grid: self.grid.clone(), exec: self.exec, data: vec![0.0; self.data.len()] }
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        self.data.iter_mut().zip(&x.data).for_each(|(p, q)| *p += a * q);
    }

    fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    fn scale_nodes(&mut self, w: &[f64]) {
        self.data.iter_mut().zip(w).for_each(|(x, y)| *x *= y);
    }

    fn axpy_nodes(&mut self, w: &[(usize, f64)], x: &Self) {
        for &(i, a) in w {
            self.data[i] += a * x.data[i];
        }
    }

    fn mul_unit(&self, axis: usize) -> Self {
        let mut out = self.clone();
        for (i, x) in out.data.iter_mut().enumerate() {
            let p = self.grid.position(i);
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            *x = if r > 0.0 { *x * p[axis] / r } else { 0.0 };
        }
        out
    }

    fn mul_coord(&self, axis: usize) -> Self {
        let mut out = self.clone();
        for (i, x) in out.data.iter_mut().enumerate() {
            *x *= self.grid.position(i)[axis];
        }
        out
    }

    fn deriv(&self, axis: usize) -> Self {
        let data = self.grid.derivative(&self.data, axis, self.exec).expect("finite field");
        Self { grid: self.grid.clone(), exec: self.exec, data }
    }

    fn inner_weighted(&self, other: &Self, w: Option<&[f64]>) -> f64 {
        let s: f64 = (0..self.data.len())
            .map(|i| w.map_or(1.0, |w| w[i]) * self.data[i] * other.data[i])
            .sum();
        s * self.grid.h().powi(3)
    }

    fn node_abs(&self, i: usize) -> f64 {
        self.data[i].abs()
    }

    fn sup_abs_masked(&self, mask: Option<&[bool]>) -> f64 {
        self.data
            .iter()
            .enumerate()
            .filter(|(i, _)| mask.map_or(true, |m| m[*i]))
            .fold(0.0, |a, (_, x)| a.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_means() {
        assert_eq!(sphere_mean([0, 0, 0]), 1.0);
        assert!((sphere_mean([2, 0, 0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((sphere_mean([2, 2, 0]) - 1.0 / 15.0).abs() < 1e-15);
        assert!((sphere_mean([4, 0, 0]) - 0.2).abs() < 1e-15);
        assert_eq!(sphere_mean([1, 1, 0]), 0.0);
    }

    fn gauss(g: &RadialGrid) -> Vec<f64> {
        g.nodes().iter().map(|r| (-r * r).exp()).collect()
    }

    #[test]
    fn angular_derivatives_match_closed_forms() {
        let g = RadialGrid::new(10.0, 256).unwrap();
        let f = AngularField::radial(&g, gauss(&g)).unwrap();
        // φ = e^{-r²}: ∂_1 φ = -2 x₁ e^{-r²}, ∂_1∂_1 φ = (4x₁² - 2) e^{-r²}
        let d1 = f.deriv(0);
        let d11 = d1.deriv(0);
        for (j, r) in g.nodes().iter().enumerate().step_by(17) {
            let e = (-r * r).exp();
            for dir in sample_directions().iter().step_by(7) {
                let x = [r * dir[0], r * dir[1], r * dir[2]];
                assert!((d1.eval(j, *dir) + 2.0 * x[0] * e).abs() < 1e-9);
                assert!((d11.eval(j, *dir) - (4.0 * x[0] * x[0] - 2.0) * e).abs() < 1e-8);
            }
        }
        // Laplacian of e^{-r²} is (4r² - 6) e^{-r²}
        let lap = f.laplacian();
        for (j, r) in g.nodes().iter().enumerate().step_by(13) {
            let want = (4.0 * r * r - 6.0) * (-r * r).exp();
            assert!((lap.eval(j, [0.6, 0.0, 0.8]) - want).abs() < 1e-8);
        }
    }

    #[test]
    fn rotations_annihilate_radial_fields() {
        let g = RadialGrid::new(10.0, 128).unwrap();
        let f = AngularField::radial(&g, gauss(&g)).unwrap();
        let mut om = f.deriv(1).mul_coord(0);
        om.axpy(-1.0, &f.deriv(0).mul_coord(1));
        assert!(om.sup_abs() < 1e-14);
    }

    #[test]
    fn inner_products_use_sphere_moments() {
        let g = RadialGrid::new(10.0, 512).unwrap();
        let f = AngularField::radial(&g, gauss(&g)).unwrap();
        // ‖e^{-r²}‖² = (π/2)^{3/2}; ‖x̂₁ e^{-r²}‖² is a third of it
        let want = (PI / 2.0).powf(1.5);
        assert!((f.norm_sq() - want).abs() < 1e-10);
        assert!((f.mul_unit(0).norm_sq() - want / 3.0).abs() < 1e-10);
        assert!(f.mul_unit(0).inner(&f.mul_unit(1)).abs() < 1e-15);
    }

    #[test]
    fn box_and_angular_agree() {
        let rg = RadialGrid::new(8.0, 256).unwrap();
        let bg = BoxGrid::new(6.0, 48).unwrap();
        let a = AngularField::radial(&rg, gauss(&rg)).unwrap();
        let bdata: Vec<f64> = (0..bg.len())
            .map(|i| {
                let p = bg.position(i);
                (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp()
            })
            .collect();
        let b = BoxField::new(&bg, bdata, Execution::Sequential).unwrap();
        let la = a.deriv(0).mul_coord(1).norm_sq();
        let lb = b.deriv(0).mul_coord(1).norm_sq();
        assert!((la - lb).abs() < 1e-8 * la, "{la} {lb}");
    }
}
