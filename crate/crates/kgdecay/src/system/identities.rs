//! Structural identities checked against recorded runs.
//!
//! Both checks re-solve auxiliary linear Klein-Gordon equations driven by
//! recorded fields. The replay propagates exactly between frames and
//! integrates the Duhamel term with the endpoint-corrected trapezoid rule,
//! which uses the stored source rates and is fourth order in the stride.
//! The remaining residual is the splitting error of the recorded run.

use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralCoeffs};
use crate::par::Execution;
use crate::propagator::{multiplier_omega, omega_max, Mass, ModalPair, Rotation};
use crate::system::history::{Frame, History};
use crate::system::params::{Preset, SystemParams};
use crate::system::solver::scale_modes;

/// Largest frame stride the replay accepts on `grid`: the sources are
/// products of fields, so their time content reaches about `2 ω_max`, and the
/// cubic interpolant needs `stride · ω_max ≤ 2`.
pub fn max_replay_stride(grid: &Grid) -> f64 {
    2.0 / omega_max(grid, Mass::ONE)
}

/// Residual sup norms at each frame next to the sup norm of the reference
/// field they are measured against.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentitySeries {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub reference: Vec<f64>,
}

impl IdentitySeries {
    /// `max_t residual / max_t reference`.
    pub fn max_relative(&self) -> f64 {
        let r = self.residual.iter().fold(0.0f64, |a, b| a.max(*b));
        let s = self.reference.iter().fold(0.0f64, |a, b| a.max(*b));
        if s == 0.0 {
            r
        } else {
            r / s
        }
    }
}

fn to_modes(grid: &Grid, physical: &[f64], exec: Execution) -> Result<SpectralCoeffs> {
    grid.forward_with(&grid.to_native(physical), exec)
}

/// Per-mode weights of `∫_0^Δ E(τ)(0, q(τ)) dτ` for a source `q` that is the
/// cubic Hermite interpolant of `(f0, f0', f1, f1')` over the stride. Exact
/// for cubic sources, uniformly in the frequency.
struct FilonWeights {
    /// value and rate weights, indexed by `[f0, f0', f1, f1']`
    value: [Vec<f64>; 4],
    rate: [Vec<f64>; 4],
}

/// `(L_j, K_j) = (∫_0^Δ τ^j sin(ωτ)/ω dτ, ∫_0^Δ τ^j cos(ωτ) dτ)`, `j = 0..4`.
fn trig_moments(w: f64, step: f64) -> ([f64; 4], [f64; 4]) {
    let z = w * step;
    let mut l = [0.0; 4];
    let mut k = [0.0; 4];
    if z < 1.0 {
        // Taylor series in ωτ
        for j in 0..4 {
            let (mut ls, mut ks) = (0.0, 0.0);
            let mut fact_odd = 1.0; // (2n+1)!
            let mut fact_even = 1.0; // (2n)!
            let mut zpow = 1.0; // (-ω²)^n
            for n in 0..20 {
                if n > 0 {
                    fact_even *= (2 * n - 1) as f64 * (2 * n) as f64;
                    fact_odd *= (2 * n) as f64 * (2 * n + 1) as f64;
                    zpow *= -w * w;
                }
                let e = (2 * n + j) as i32;
                ls += zpow * step.powi(e + 2) / (fact_odd * (e + 2) as f64);
                ks += zpow * step.powi(e + 1) / (fact_even * (e + 1) as f64);
            }
            l[j] = ls;
            k[j] = ks;
        }
    } else {
        let (sn, cs) = z.sin_cos();
        let (s_end, c_end) = (sn / w, cs);
        for j in 0..4 {
            let dj = step.powi(j as i32);
            k[j] = dj * s_end - if j > 0 { j as f64 * l[j - 1] } else { 0.0 };
            let start = if j == 0 { 1.0 } else { 0.0 };
            let tail = if j > 0 { j as f64 * k[j - 1] } else { 0.0 };
            l[j] = (start - dj * c_end + tail) / (w * w);
        }
    }
    (l, k)
}

impl FilonWeights {
    fn new(omega: &[f64], step: f64) -> Self {
        // Hermite basis in σ = τ/Δ with τ = Δ - s, as monomial coefficients
        // for f0 (at σ = 1), f0', f1 (at σ = 0), f1'. Derivative slots pick up
        // -Δ from d/ds = -d/dτ and the Δ of the basis.
        let basis: [[f64; 4]; 4] = [
            [0.0, 0.0, 3.0, -2.0],
            [0.0, 0.0, step, -step],
            [1.0, 0.0, -3.0, 2.0],
            [0.0, -step, 2.0 * step, -step],
        ];
        let mut value: [Vec<f64>; 4] = Default::default();
        let mut rate: [Vec<f64>; 4] = Default::default();
        for &w in omega {
            let (l, k) = trig_moments(w, step);
            for (b, coef) in basis.iter().enumerate() {
                let (mut vb, mut rb) = (0.0, 0.0);
                for j in 0..4 {
                    let a = coef[j] / step.powi(j as i32);
                    vb += a * l[j];
                    rb += a * k[j];
                }
                value[b].push(vb);
                rate[b].push(rb);
            }
        }
        Self { value, rate }
    }

    fn accumulate(&self, inputs: [&SpectralCoeffs; 4], c: &mut SpectralCoeffs, ct: &mut SpectralCoeffs) {
        for (b, x) in inputs.iter().enumerate() {
            let mut v = (*x).clone();
            scale_modes(&mut v, &self.value[b], 1.0);
            c.axpy(1.0, &v);
            let mut r = (*x).clone();
            scale_modes(&mut r, &self.rate[b], 1.0);
            ct.axpy(1.0, &r);
        }
    }
}

/// Mode-space solutions of `-□φ + m²φ = f` at every frame of `history`,
/// with `f` and `∂_t f` given per frame by `source`.
pub fn duhamel_replay<S>(
    grid: &Grid,
    m: Mass,
    history: &History,
    data: ModalPair,
    exec: Execution,
    source: S,
) -> Result<Vec<ModalPair>>
where
    S: Fn(&Frame) -> (Vec<f64>, Vec<f64>),
{
    let frames = &history.frames;
    if frames.len() < 2 {
        return Err(Error::param("history", "need at least two frames"));
    }
    let step = history.stride;
    let limit = max_replay_stride(grid);
    if step > limit * (1.0 + 1e-12) {
        return Err(Error::param(
            "stride",
            format!("{step} is too coarse for the replay on this grid (at most {limit})"),
        ));
    }
    let omega = multiplier_omega(grid, m);
    let rot = Rotation::new(&omega, step);
    let weights = FilonWeights::new(&omega, step);
    let modes = |f: &Frame| -> Result<(SpectralCoeffs, SpectralCoeffs)> {
        let (a, b) = source(f);
        Ok((to_modes(grid, &a, exec)?, to_modes(grid, &b, exec)?))
    };
    let mut out = Vec::with_capacity(frames.len());
    let mut cur = data;
    let mut prev = modes(&frames[0])?;
    out.push(cur.clone());
    for f in &frames[1..] {
        let next = modes(f)?;
        rot.apply(&mut cur.c, &mut cur.ct);
        weights.accumulate([&prev.0, &prev.1, &next.0, &next.1], &mut cur.c, &mut cur.ct);
        out.push(cur.clone());
        prev = next;
    }
    Ok(out)
}

fn physical_pair(grid: &Grid, f: &Frame) -> (Vec<f64>, Vec<f64>) {
    (grid.physical(f.v.level(0)), grid.physical(f.v.level(1)))
}

/// Checks `u = ∂_α Φ^α + Φ⁵`, where `Φ^α` solve the Klein-Gordon equation
/// with source `P^α v²` and zero data and `Φ⁵` has source `M₁ v³` and data
/// `(u₀, u₁ - P⁰ v₀²)`. Only `v` and the data of `u` are read from the
/// history; the comparison is against the recorded `u`.
pub fn divergence_decomposition_check(
    grid: &Grid,
    history: &History,
    params: &SystemParams,
    preset: &Preset,
    exec: Execution,
) -> Result<IdentitySeries> {
    match preset {
        Preset::Model => {}
        Preset::ModelPlusStrongNull { forms } if forms.is_empty() => {}
        _ => {
            return Err(Error::Unsupported(
                "the divergence decomposition needs the model right-hand side".into(),
            ))
        }
    }
    let spatial: Vec<usize> = match grid {
        Grid::Radial(_) if params.p[1] != 0.0 => {
            return Err(Error::Unsupported(
                "radial decomposition needs P^r = 0 (∂_r(v²) is not a divergence)".into(),
            ))
        }
        Grid::Radial(_) => vec![],
        Grid::Box(_) => (1..4).filter(|a| params.p[*a] != 0.0).collect(),
    };
    let frames = &history.frames;
    let first = frames.first().ok_or(Error::param("history", "empty"))?;
    let m = params.m;

    let (v0, _) = physical_pair(grid, first);
    let u1: Vec<f64> = grid
        .physical(first.u.level(1))
        .iter()
        .zip(&v0)
        .map(|(a, v)| a - params.p[0] * v * v)
        .collect();
    let data5 = ModalPair {
        c: grid.forward_with(first.u.level(0), exec)?,
        ct: to_modes(grid, &u1, exec)?,
    };
    let zero = ModalPair { c: data5.c.zeros_like(), ct: data5.c.zeros_like() };

    let m1 = params.m1;
    let phi5 = duhamel_replay(grid, m, history, data5, exec, |f| {
        let (v, vt) = physical_pair(grid, f);
        (
            v.iter().map(|x| m1 * x * x * x).collect(),
            v.iter().zip(&vt).map(|(x, y)| 3.0 * m1 * x * x * y).collect(),
        )
    })?;
    let quad = |p: f64| {
        move |f: &Frame| {
            let (v, vt) = physical_pair(grid, f);
            (
                v.iter().map(|x| p * x * x).collect::<Vec<f64>>(),
                v.iter().zip(&vt).map(|(x, y)| 2.0 * p * x * y).collect::<Vec<f64>>(),
            )
        }
    };
    let phi0 = if params.p[0] != 0.0 {
        Some(duhamel_replay(grid, m, history, zero.clone(), exec, quad(params.p[0]))?)
    } else {
        None
    };
    let phis: Vec<(usize, Vec<ModalPair>)> = spatial
        .iter()
        .map(|&a| Ok((a, duhamel_replay(grid, m, history, zero.clone(), exec, quad(params.p[a]))?)))
        .collect::<Result<_>>()?;

    let mut out = IdentitySeries { times: vec![], residual: vec![], reference: vec![] };
    for (k, f) in frames.iter().enumerate() {
        let mut c = phi5[k].c.clone();
        if let Some(p0) = &phi0 {
            c.axpy(1.0, &p0[k].ct);
        }
        for (a, phi) in &phis {
            if let (Grid::Box(b), SpectralCoeffs::Fourier(x)) = (grid, &phi[k].c) {
                c.axpy(1.0, &SpectralCoeffs::Fourier(b.derivative_coeffs(x, a - 1)));
            }
        }
        let model = grid.inverse_with(&c, exec);
        let res: Vec<f64> = f.u.level(0).iter().zip(&model).map(|(a, b)| a - b).collect();
        out.times.push(f.t);
        out.residual.push(grid.sup_abs(&res));
        out.reference.push(grid.sup_abs(f.u.level(0)));
    }
    Ok(out)
}

/// Checks that `ū = u + v²` solves `-□ū + m²ū = 2 v Q_v` for a run of the
/// type-2 pair, with `Q_v = q_v v³`.
pub fn type2_residual(
    grid: &Grid,
    history: &History,
    params: &SystemParams,
    preset: &Preset,
    exec: Execution,
) -> Result<IdentitySeries> {
    let Preset::Type2Pair { qv } = *preset else {
        return Err(Error::Unsupported("type-2 residual needs the type2_pair preset".into()));
    };
    let frames = &history.frames;
    let first = frames.first().ok_or(Error::param("history", "empty"))?;
    let bar = |f: &Frame| -> (Vec<f64>, Vec<f64>) {
        let (v, vt) = physical_pair(grid, f);
        let u = grid.physical(f.u.level(0));
        let ut = grid.physical(f.u.level(1));
        (
            u.iter().zip(&v).map(|(a, x)| a + x * x).collect(),
            ut.iter().zip(v.iter().zip(&vt)).map(|(a, (x, y))| a + 2.0 * x * y).collect(),
        )
    };
    let (b0, b1) = bar(first);
    let data = ModalPair { c: to_modes(grid, &b0, exec)?, ct: to_modes(grid, &b1, exec)? };
    let w = duhamel_replay(grid, params.m, history, data, exec, |f| {
        let (v, vt) = physical_pair(grid, f);
        (
            v.iter().map(|x| 2.0 * qv * x.powi(4)).collect(),
            v.iter().zip(&vt).map(|(x, y)| 8.0 * qv * x.powi(3) * y).collect(),
        )
    })?;
    let mut out = IdentitySeries { times: vec![], residual: vec![], reference: vec![] };
    for (k, f) in frames.iter().enumerate() {
        let ub = grid.to_native(&bar(f).0);
        let model = grid.inverse_with(&w[k].c, exec);
        let res: Vec<f64> = ub.iter().zip(&model).map(|(a, b)| a - b).collect();
        out.times.push(f.t);
        out.residual.push(grid.sup_abs(&res));
        out.reference.push(grid.sup_abs(&ub));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::data::{Bump, DataSpec};
    use crate::system::solver::{solve_system, SolverConfig, Stepper, T0};

    fn run(grid: &Grid, params: &SystemParams, preset: &Preset, dt: f64, stride: f64, eps: f64) -> History {
        let st = Stepper::new(grid, params, preset, dt, Execution::Sequential).unwrap();
        let s0 = DataSpec::new(Bump::Poly { power: 6 }, eps, [1.0, 0.5, 1.0, -1.0])
            .initial_state(grid, T0)
            .unwrap();
        let mut h = History::new(stride);
        solve_system(&st, &s0, &SolverConfig::new(T0 + 4.0, stride), &mut [&mut h]).unwrap();
        h
    }

    fn model(m: f64) -> SystemParams {
        SystemParams {
            m: Mass::new(m).unwrap(),
            m1: 2.0,
            n1: 1.0,
            n2: 1.0,
            n3: 1.0,
            p: [1.5, 0.0, 0.0, 0.0],
        }
    }

    #[test]
    fn moments_match_quadrature() {
        for &(w, step) in &[(0.0, 0.1), (0.3, 0.1), (9.99, 0.1), (10.01, 0.1), (40.0, 0.25)] {
            let (l, k) = trig_moments(w, step);
            let n = 20000;
            for j in 0..4 {
                let (mut ls, mut ks) = (0.0, 0.0);
                for i in 0..n {
                    let t = (i as f64 + 0.5) * step / n as f64;
                    let s = if w == 0.0 { t } else { (w * t).sin() / w };
                    ls += t.powi(j as i32) * s * step / n as f64;
                    ks += t.powi(j as i32) * (w * t).cos() * step / n as f64;
                }
                assert!((l[j] - ls).abs() < 1e-9 * step.powi(j as i32 + 2), "{w} {j}");
                assert!((k[j] - ks).abs() < 1e-9 * step.powi(j as i32 + 1), "{w} {j}");
            }
        }
    }

    #[test]
    fn replay_reproduces_forced_linear_run() {
        // zero source and u's own data: Φ⁵ is the homogeneous solution
        let g = Grid::radial(12.0, 128).unwrap();
        let mut p = model(0.5);
        p.m1 = 0.0;
        p.p = [0.0; 4];
        let h = run(&g, &p, &Preset::Model, 0.01, 0.05, 0.1);
        let r = divergence_decomposition_check(&g, &h, &p, &Preset::Model, Execution::Sequential).unwrap();
        assert!(r.max_relative() < 1e-12, "{}", r.max_relative());
    }

    #[test]
    fn decomposition_converges_at_second_order() {
        let g = Grid::radial(12.0, 128).unwrap();
        let p = model(0.5);
        let res = |dt: f64| {
            let h = run(&g, &p, &Preset::Model, dt, 2.0 * dt, 0.3);
            divergence_decomposition_check(&g, &h, &p, &Preset::Model, Execution::Sequential)
                .unwrap()
                .max_relative()
        };
        let (a, b) = (res(0.01), res(0.005));
        assert!((a / b).log2() > 1.9, "{a} {b}");
        assert!(b < 1e-3);
    }

    #[test]
    fn type2_converges_at_second_order() {
        let g = Grid::radial(12.0, 128).unwrap();
        let p = SystemParams::linear(Mass::new(0.5).unwrap());
        let preset = Preset::Type2Pair { qv: 1.0 };
        let res = |dt: f64| {
            let h = run(&g, &p, &preset, dt, 2.0 * dt, 0.3);
            let r = type2_residual(&g, &h, &p, &preset, Execution::Sequential).unwrap();
            assert!(r.residual[0] < 1e-14 * r.reference[0]);
            r.max_relative()
        };
        let (a, b) = (res(0.01), res(0.005));
        assert!((a / b).log2() > 1.9, "{a} {b}");
        assert!(b < 1e-3);
    }

    #[test]
    fn coarse_stride_rejected() {
        let g = Grid::radial(12.0, 128).unwrap();
        let p = model(0.5);
        let h = run(&g, &p, &Preset::Model, 0.01, 0.1, 0.1);
        assert!(max_replay_stride(&g) < 0.1);
        assert!(divergence_decomposition_check(&g, &h, &p, &Preset::Model, Execution::Sequential).is_err());
    }

    #[test]
    fn wrong_presets_rejected() {
        let g = Grid::radial(12.0, 128).unwrap();
        let p = model(0.5);
        let h = run(&g, &p, &Preset::Model, 0.01, 0.05, 0.1);
        assert!(type2_residual(&g, &h, &p, &Preset::Model, Execution::Sequential).is_err());
        let mut pr = p;
        pr.p[1] = 1.0;
        assert!(divergence_decomposition_check(&g, &h, &pr, &Preset::Model, Execution::Sequential).is_err());
    }
}
