//! Commutator identities of the admissible vector fields, checked on
//! manufactured test fields with exact time jets.
//!
//! Rotations obey `[∂_c, Ω_ab] = δ_ca ∂_b - δ_cb ∂_a`, which follows from
//! `Ω_ab = x^a ∂_b - x^b ∂_a` directly.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::diagnostics::words::{word_name, FieldJet, Letter};
use crate::error::Result;
use crate::field::{AngularField, BoxField, FieldRepr, Monomial};
use crate::grid::{BoxGrid, RadialGrid};
use crate::par::Execution;

/// `T(t) Σ_α c_α x^α e^{-|x|²/2}` with a polynomial time factor.
#[derive(Clone, Debug)]
pub struct TestField {
    pub name: String,
    /// Coefficients of `T(t)` in increasing degree.
    pub time: Vec<f64>,
    pub space: Vec<(Monomial, f64)>,
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, x)| k as f64 * x).collect()
}

fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |a, x| a * t + x)
}

impl TestField {
    /// `T^{(k)}(t)` for `k < levels`.
    fn time_jet(&self, t: f64, levels: usize) -> Vec<f64> {
        let mut c = self.time.clone();
        let mut out = Vec::with_capacity(levels);
        for _ in 0..levels {
            out.push(poly_eval(&c, t));
            c = poly_derivative(&c);
        }
        out
    }

    /// The spatial factor `Σ_α c_α x^α e^{-|x|²/2}`.
    pub fn spatial_angular(&self, grid: &RadialGrid) -> Result<AngularField> {
        // x^α = r^{|α|} x̂^α
        let terms: Vec<(Monomial, Vec<f64>)> = self
            .space
            .iter()
            .map(|(m, c)| {
                let d = (m[0] + m[1] + m[2]) as i32;
                (*m, grid.nodes().iter().map(|r| c * r.powi(d) * (-0.5 * r * r).exp()).collect())
            })
            .collect();
        AngularField::from_terms(grid, terms)
    }

    pub fn angular_jet(&self, grid: &RadialGrid, t: f64, levels: usize) -> Result<FieldJet<AngularField>> {
        let base = self.spatial_angular(grid)?;
        let levels = self
            .time_jet(t, levels)
            .into_iter()
            .map(|a| {
                let mut f = base.clone();
                f.scale(a);
                f
            })
            .collect();
        Ok(FieldJet { t, levels })
    }

    pub fn spatial_box(&self, grid: &BoxGrid, exec: Execution) -> Result<BoxField> {
        let data: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                let p: f64 = self
                    .space
                    .iter()
                    .map(|(m, c)| {
                        c * x[0].powi(m[0] as i32) * x[1].powi(m[1] as i32) * x[2].powi(m[2] as i32)
                    })
                    .sum();
                p * (-0.5 * r2).exp()
            })
            .collect();
        BoxField::new(grid, data, exec)
    }

    pub fn box_jet(&self, grid: &BoxGrid, t: f64, levels: usize, exec: Execution) -> Result<FieldJet<BoxField>> {
        let base = self.spatial_box(grid, exec)?;
        let levels = self
            .time_jet(t, levels)
            .into_iter()
            .map(|a| {
                let mut f = base.clone();
                f.scale(a);
                f
            })
            .collect();
        Ok(FieldJet { t, levels })
    }
}

/// A radial field, a field odd in `x¹`, and `count` random fields with all
/// monomials of degree at most 2 and a quartic time factor.
pub fn test_battery(seed: u64, count: usize) -> Vec<TestField> {
    let mut out = vec![
        TestField { name: "radial".into(), time: vec![1.0, 0.3, -0.1], space: vec![([0, 0, 0], 1.0)] },
        TestField {
            name: "odd-x1".into(),
            time: vec![0.5, -0.2, 0.0, 0.05],
            space: vec![([1, 0, 0], 1.0), ([1, 1, 0], 0.5)],
        },
    ];
    let monos: Vec<Monomial> = (0..3u8)
        .flat_map(|a| (0..3u8).flat_map(move |b| (0..3u8).map(move |c| [a, b, c])))
        .filter(|m| m[0] + m[1] + m[2] <= 2)
        .collect();
    let mut rng = StdRng::seed_from_u64(seed);
    for k in 0..count {
        let time = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let space = monos.iter().map(|m| (*m, rng.gen_range(-1.0..1.0))).collect();
        out.push(TestField { name: format!("random-{k}"), time, space });
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorCheck {
    pub identity: String,
    pub field: String,
    /// `sup |lhs - rhs|` over all shared time levels, relative to the size
    /// of the two products and of the field itself.
    pub residual: f64,
}

fn sup_levels<F: FieldRepr>(j: &FieldJet<F>, depth: usize) -> f64 {
    j.levels[..depth].iter().map(|f| f.sup_abs()).fold(0.0, f64::max)
}

fn residual<F: FieldRepr>(lhs: &FieldJet<F>, rhs: &FieldJet<F>, scale: f64, depth: usize) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..depth {
        let mut d = lhs.levels[k].clone();
        d.axpy(-1.0, &rhs.levels[k]);
        worst = worst.max(d.sup_abs());
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Right-hand sides `Σ c_k Γ_k` of the table `[Γ₁, Γ₂] = Σ c_k Γ_k`.
pub fn commutator_table() -> Vec<(Letter, Letter, Vec<(f64, Letter)>)> {
    let mut t = Vec::new();
    let rot = |a: usize, b: usize| -> (f64, Letter) {
        if a < b {
            (1.0, Letter::Omega(a as u8, b as u8))
        } else {
            (-1.0, Letter::Omega(b as u8, a as u8))
        }
    };
    for alpha in 0..4 {
        for a in 0..3 {
            // [∂_α, L_a] = δ_{0α} ∂_a + δ_{aα} ∂_t
            let mut rhs = Vec::new();
            if alpha == 0 {
                rhs.push((1.0, Letter::D(a as u8)));
            }
            if alpha == a + 1 {
                rhs.push((1.0, Letter::Dt));
            }
            t.push((Letter::partial(alpha), Letter::L(a as u8), rhs));
        }
        for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
            // [∂_α, Ω_ab] = δ_{aα} ∂_b - δ_{bα} ∂_a
            let mut rhs = Vec::new();
            if alpha == a + 1 {
                rhs.push((1.0, Letter::D(b as u8)));
            }
            if alpha == b + 1 {
                rhs.push((-1.0, Letter::D(a as u8)));
            }
            t.push((Letter::partial(alpha), Letter::Omega(a as u8, b as u8), rhs));
        }
    }
    for a in 0..3 {
        for (b, c) in [(0usize, 1usize), (0, 2), (1, 2)] {
            // [L_a, Ω_bc] = δ_ab L_c - δ_ac L_b
            let mut rhs = Vec::new();
            if a == b {
                rhs.push((1.0, Letter::L(c as u8)));
            }
            if a == c {
                rhs.push((-1.0, Letter::L(b as u8)));
            }
            t.push((Letter::L(a as u8), Letter::Omega(b as u8, c as u8), rhs));
        }
        for b in (a + 1)..3 {
            // [L_a, L_b] = Ω_ab
            t.push((Letter::L(a as u8), Letter::L(b as u8), vec![rot(a, b)]));
        }
    }
    t
}

/// Every table entry and `[Γ, -□ + m²] = 0` for every letter and each mass.
/// The jet needs at least four time levels.
pub fn commutator_battery<F: FieldRepr>(
    name: &str,
    jet: &FieldJet<F>,
    masses: &[f64],
) -> Result<Vec<CommutatorCheck>> {
    let mut out = Vec::new();
    let base_scale = sup_levels(jet, jet.depth());
    for (g1, g2, rhs) in commutator_table() {
        let a = jet.apply(g2)?.apply(g1)?;
        let b = jet.apply(g1)?.apply(g2)?;
        let depth = a.depth().min(b.depth());
        let mut lhs = a.clone();
        lhs.axpy(-1.0, &b);
        let mut r = FieldJet { t: jet.t, levels: lhs.levels.iter().map(|f| f.zeros_like()).collect() };
        for (c, l) in &rhs {
            r.axpy(*c, &jet.apply(*l)?);
        }
        let depth = depth.min(r.depth());
        let scale = sup_levels(&a, depth).max(sup_levels(&b, depth)).max(base_scale);
        out.push(CommutatorCheck {
            identity: format!("[{g1}, {g2}]"),
            field: name.into(),
            residual: residual(&lhs, &r, scale, depth),
        });
    }
    for &m in masses {
        let k = jet.klein_gordon(m)?;
        for g in Letter::all() {
            let a = k.apply(g)?;
            let b = jet.apply(g)?.klein_gordon(m)?;
            let depth = a.depth().min(b.depth());
            let scale = sup_levels(&a, depth).max(sup_levels(&b, depth)).max(base_scale);
            out.push(CommutatorCheck {
                identity: format!("[{}, -box + {m}^2]", word_name(&[g])),
                field: name.into(),
                residual: residual(&a, &b, scale, depth),
            });
        }
    }
    Ok(out)
}
