//! Polynomial nonlinearities over pointwise channels.
//!
//! Every right-hand side in the supported presets is a sum of
//! `coef · Π channel`, where a channel is a component (`u` or `v`), a time
//! derivative order and optionally one spatial derivative. Representing
//! sources this way gives exact time derivatives (product rule) and exact
//! differences `F(a) - F(b)` via telescoping products, which the Picard
//! driver needs to keep relative accuracy on tiny increments.

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::system::params::{Preset, SystemParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Comp {
    U,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Channel {
    pub comp: Comp,
    /// Number of time derivatives.
    pub order: u8,
    /// Spatial derivative axis (radial grids: 0 means `∂_r`).
    pub axis: Option<u8>,
}

impl Channel {
    pub const fn value(comp: Comp) -> Self {
        Channel { comp, order: 0, axis: None }
    }

    pub const fn rate(comp: Comp) -> Self {
        Channel { comp, order: 1, axis: None }
    }

    pub const fn grad(comp: Comp, axis: u8) -> Self {
        Channel { comp, order: 0, axis: Some(axis) }
    }

    pub fn dt(self) -> Self {
        Channel { order: self.order + 1, ..self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub factors: SmallVec<[Channel; 4]>,
}

impl Term {
    fn new(coef: f64, factors: &[Channel]) -> Self {
        Self { coef, factors: factors.iter().copied().collect() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: Vec<Term>,
}

/// Channel samples addressed by [`Channel`].
#[derive(Clone, Debug, Default)]
pub struct ChannelSet {
    entries: Vec<(Channel, Vec<f64>)>,
}

impl ChannelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, ch: Channel, data: Vec<f64>) {
        match self.entries.iter_mut().find(|(c, _)| *c == ch) {
            Some(slot) => slot.1 = data,
            None => self.entries.push((ch, data)),
        }
    }

    pub fn get(&self, ch: Channel) -> Option<&[f64]> {
        self.entries.iter().find(|(c, _)| *c == ch).map(|(_, d)| d.as_slice())
    }

    pub fn contains(&self, ch: Channel) -> bool {
        self.get(ch).is_some()
    }

    fn lookup(&self, ch: Channel) -> Result<&[f64]> {
        self.get(ch)
            .ok_or_else(|| Error::Unsupported(format!("channel {ch:?} was not provided")))
    }
}

impl Poly {
    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == 0.0)
    }

    fn push(&mut self, coef: f64, factors: &[Channel]) {
        if coef != 0.0 {
            self.terms.push(Term::new(coef, factors));
        }
    }

    /// All channels referenced, sorted and deduplicated.
    pub fn channels(&self) -> Vec<Channel> {
        let mut out: Vec<Channel> =
            self.terms.iter().flat_map(|t| t.factors.iter().copied()).collect();
        out.sort();
        out.dedup();
        out
    }

    /// `∂_t` of the polynomial by the product rule.
    pub fn time_derivative(&self) -> Poly {
        let mut out = Poly::default();
        for t in &self.terms {
            for i in 0..t.factors.len() {
                let mut f = t.factors.clone();
                f[i] = f[i].dt();
                out.terms.push(Term { coef: t.coef, factors: f });
            }
        }
        out
    }

    fn resolve<'a>(&self, set: &'a ChannelSet) -> Result<Vec<(f64, Vec<&'a [f64]>)>> {
        self.terms
            .iter()
            .map(|t| {
                let fs = t.factors.iter().map(|c| set.lookup(*c)).collect::<Result<Vec<_>>>()?;
                Ok((t.coef, fs))
            })
            .collect()
    }

    /// Pointwise evaluation over `len` samples.
    pub fn eval(&self, set: &ChannelSet, len: usize, exec: Execution) -> Result<Vec<f64>> {
        let terms = self.resolve(set)?;
        let mut out = vec![0.0; len];
        exec.fill(&mut out, |i| {
            terms.iter().map(|(c, fs)| fs.iter().fold(*c, |acc, f| acc * f[i])).sum()
        });
        Ok(out)
    }

    /// `F(base + delta) - F(base)` evaluated without cancellation:
    /// `Π a - Π b = Σ_i (Π_{j<i} b_j) δ_i (Π_{j>i} a_j)` with `a = b + δ`.
    pub fn eval_diff(
        &self,
        base: &ChannelSet,
        delta: &ChannelSet,
        len: usize,
        exec: Execution,
    ) -> Result<Vec<f64>> {
        let b = self.resolve(base)?;
        let d = self.resolve(delta)?;
        let mut out = vec![0.0; len];
        exec.fill(&mut out, |i| {
            let mut total = 0.0;
            for ((coef, bs), (_, ds)) in b.iter().zip(&d) {
                let k = bs.len();
                let mut term = 0.0;
                // prefix products of b, suffix products of a = b + d
                let mut suffix = [1.0f64; 8];
                for j in (0..k).rev() {
                    let next = if j + 1 < k { suffix[j + 1] } else { 1.0 };
                    suffix[j] = next * (bs[j][i] + ds[j][i]);
                }
                let mut prefix = 1.0;
                for j in 0..k {
                    let after = if j + 1 < k { suffix[j + 1] } else { 1.0 };
                    term += prefix * ds[j][i] * after;
                    prefix *= bs[j][i];
                }
                total += coef * term;
            }
            total
        });
        Ok(out)
    }
}

/// Whether the spatial layout is spherically reduced or a full box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    Radial,
    Box,
}

impl Geometry {
    pub fn axes(self) -> u8 {
        match self {
            Geometry::Radial => 1,
            Geometry::Box => 3,
        }
    }
}

/// The pair of right-hand sides `(F_u, F_v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Nonlinearity {
    pub u: Poly,
    pub v: Poly,
}

/// `∂_α` applied to a component, as a channel (α = 0 is time).
fn partial(comp: Comp, alpha: usize, geometry: Geometry) -> Option<Channel> {
    match (alpha, geometry) {
        (0, _) => Some(Channel::rate(comp)),
        (1, Geometry::Radial) => Some(Channel::grad(comp, 0)),
        (_, Geometry::Radial) => None,
        (a, Geometry::Box) => Some(Channel::grad(comp, (a - 1) as u8)),
    }
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self { u: Poly::default(), v: Poly::default() }
    }

    pub fn build(params: &SystemParams, preset: &Preset, geometry: Geometry) -> Result<Self> {
        params.validate()?;
        preset.validate()?;
        use Comp::{U, V};
        let (uu, ut, vv, vt) = (
            Channel::value(U),
            Channel::rate(U),
            Channel::value(V),
            Channel::rate(V),
        );
        let mut fu = Poly::default();
        let mut fv = Poly::default();
        match preset {
            Preset::Model | Preset::ModelPlusStrongNull { .. } => {
                if geometry == Geometry::Radial && (params.p[2] != 0.0 || params.p[3] != 0.0) {
                    return Err(Error::Unsupported(
                        "radial grids accept only P^0 and the radial component P^r = p[1]".into(),
                    ));
                }
                fu.push(params.m1, &[vv, vv, vv]);
                fu.push(2.0 * params.p[0], &[vv, vt]);
                for a in 0..geometry.axes() {
                    fu.push(2.0 * params.p[1 + a as usize], &[vv, Channel::grad(V, a)]);
                }
                fv.push(params.n1, &[ut, ut]);
                fv.push(params.n2, &[uu, uu, uu]);
                fv.push(params.n3, &[uu, vv]);
                if let Preset::ModelPlusStrongNull { forms } = preset {
                    for f in forms {
                        // Q_ab with both indices spatial vanishes on radial fields
                        let (Some(au), Some(bv), Some(bu), Some(av)) = (
                            partial(U, f.alpha, geometry),
                            partial(V, f.beta, geometry),
                            partial(U, f.beta, geometry),
                            partial(V, f.alpha, geometry),
                        ) else {
                            continue;
                        };
                        if f.alpha == f.beta {
                            continue;
                        }
                        fu.push(f.coef, &[au, bv]);
                        fu.push(-f.coef, &[bu, av]);
                    }
                }
            }
            Preset::Type2Pair { qv } => {
                let m2 = params.m.value().powi(2);
                fu.push(2.0 - m2, &[vv, vv]);
                fu.push(-2.0, &[vt, vt]);
                for a in 0..geometry.axes() {
                    let g = Channel::grad(V, a);
                    fu.push(2.0, &[g, g]);
                }
                fv.push(*qv, &[vv, vv, vv]);
            }
        }
        Ok(Self { u: fu, v: fv })
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }

    /// Channels needed to evaluate both sources.
    pub fn channels(&self) -> Vec<Channel> {
        let mut c = self.u.channels();
        c.extend(self.v.channels());
        c.sort();
        c.dedup();
        c
    }

    pub fn time_derivative(&self) -> Nonlinearity {
        Nonlinearity { u: self.u.time_derivative(), v: self.v.time_derivative() }
    }

    pub fn eval(&self, set: &ChannelSet, len: usize, exec: Execution) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.u.eval(set, len, exec)?, self.v.eval(set, len, exec)?))
    }

    pub fn eval_diff(
        &self,
        base: &ChannelSet,
        delta: &ChannelSet,
        len: usize,
        exec: Execution,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            self.u.eval_diff(base, delta, len, exec)?,
            self.v.eval_diff(base, delta, len, exec)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::Mass;
    use crate::system::params::NullForm;

    fn set(pairs: &[(Channel, Vec<f64>)]) -> ChannelSet {
        let mut s = ChannelSet::new();
        for (c, d) in pairs {
            s.insert(*c, d.clone());
        }
        s
    }

    fn params() -> SystemParams {
        SystemParams {
            m: Mass::new(0.4).unwrap(),
            m1: 1.3,
            n1: -0.7,
            n2: 0.9,
            n3: 0.5,
            p: [0.6, -0.4, 0.0, 0.0],
        }
    }

    #[test]
    fn telescoping_difference_matches_direct() {
        let nl = Nonlinearity::build(&params(), &Preset::Model, Geometry::Radial).unwrap();
        let base_vals: Vec<(Channel, Vec<f64>)> = nl
            .channels()
            .into_iter()
            .enumerate()
            .map(|(i, c)| (c, vec![0.3 + 0.1 * i as f64, -0.2 * i as f64 + 0.05]))
            .collect();
        let delta_vals: Vec<(Channel, Vec<f64>)> = base_vals
            .iter()
            .map(|(c, v)| (*c, v.iter().map(|x| 1e-3 * (x + 0.7)).collect()))
            .collect();
        let sum_vals: Vec<(Channel, Vec<f64>)> = base_vals
            .iter()
            .zip(&delta_vals)
            .map(|((c, a), (_, b))| (*c, a.iter().zip(b).map(|(x, y)| x + y).collect()))
            .collect();
        let ex = Execution::Sequential;
        let (du, dv) = nl.eval_diff(&set(&base_vals), &set(&delta_vals), 2, ex).unwrap();
        let (au, av) = nl.eval(&set(&sum_vals), 2, ex).unwrap();
        let (bu, bv) = nl.eval(&set(&base_vals), 2, ex).unwrap();
        for i in 0..2 {
            assert!((du[i] - (au[i] - bu[i])).abs() < 1e-14);
            assert!((dv[i] - (av[i] - bv[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn algebraic_examples() {
        // u = v, N1 = 0, N2 = 1, N3 = -1 gives u^3 - u^2
        let p = SystemParams { n2: 1.0, n3: -1.0, ..SystemParams::linear(Mass::ONE) };
        let nl = Nonlinearity::build(&p, &Preset::Model, Geometry::Box).unwrap();
        let x = vec![0.5, -2.0, 3.0];
        let s = set(&[
            (Channel::value(Comp::U), x.clone()),
            (Channel::value(Comp::V), x.clone()),
            (Channel::rate(Comp::U), vec![9.0; 3]),
        ]);
        let fv = nl.v.eval(&s, 3, Execution::Sequential).unwrap();
        for (i, xi) in x.iter().enumerate() {
            assert!((fv[i] - (xi.powi(3) - xi * xi)).abs() < 1e-14);
        }
        let radial_bad = SystemParams { p: [0.0, 0.0, 1.0, 0.0], ..params() };
        assert!(Nonlinearity::build(&radial_bad, &Preset::Model, Geometry::Radial).is_err());
    }

    #[test]
    fn spatial_null_forms_dropped_in_radial_mode() {
        let preset = Preset::ModelPlusStrongNull {
            forms: vec![NullForm { alpha: 2, beta: 3, coef: 1.0 }, NullForm { alpha: 0, beta: 1, coef: 2.0 }],
        };
        let lin = SystemParams::linear(Mass::ONE);
        let nl = Nonlinearity::build(&lin, &preset, Geometry::Radial).unwrap();
        assert_eq!(nl.u.terms.len(), 2);
        let nl = Nonlinearity::build(&lin, &preset, Geometry::Box).unwrap();
        assert_eq!(nl.u.terms.len(), 4);
    }

    #[test]
    fn product_rule() {
        let p = SystemParams { m1: 2.0, ..SystemParams::linear(Mass::ONE) };
        let nl = Nonlinearity::build(&p, &Preset::Model, Geometry::Radial).unwrap();
        let d = nl.time_derivative();
        // d/dt (2 v^3) = 6 v^2 v_t
        let s = set(&[(Channel::value(Comp::V), vec![0.5]), (Channel::rate(Comp::V), vec![3.0])]);
        let val = d.u.eval(&s, 1, Execution::Sequential).unwrap()[0];
        assert!((val - 6.0 * 0.25 * 3.0).abs() < 1e-14);
    }
}
