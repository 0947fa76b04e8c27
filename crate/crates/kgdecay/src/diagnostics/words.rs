//! Vector-field words `Γ^I` over `A = {∂_α, L_a, Ω_ab}` acting on time jets.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::FieldRepr;
use crate::grid::Grid;
use crate::par::Execution;
use crate::system::history::Jet;

/// One admissible vector field. Axes are 0-based (`D(0)` is `∂_1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Dt,
    D(u8),
    /// Boost `L_a = x^a ∂_t + t ∂_a`.
    L(u8),
    /// Rotation `Ω_ab = x^a ∂_b - x^b ∂_a`, `a < b`.
    Omega(u8, u8),
}

impl Letter {
    /// The ten letters of `A`; the scaling field is not admissible.
    pub fn all() -> Vec<Letter> {
        let mut v = vec![Letter::Dt];
        v.extend((0..3).map(Letter::D));
        v.extend((0..3).map(Letter::L));
        v.extend([Letter::Omega(0, 1), Letter::Omega(0, 2), Letter::Omega(1, 2)]);
        v
    }

    pub fn boosts() -> Vec<Letter> {
        (0..3).map(Letter::L).collect()
    }

    /// `∂_α` with `α = 0` meaning time.
    pub fn partial(alpha: usize) -> Letter {
        if alpha == 0 {
            Letter::Dt
        } else {
            Letter::D((alpha - 1) as u8)
        }
    }

    /// Number of time levels the letter uses up.
    pub fn time_cost(self) -> usize {
        match self {
            Letter::Dt | Letter::L(_) => 1,
            Letter::D(_) | Letter::Omega(..) => 0,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Dt => write!(f, "dt"),
            Letter::D(a) => write!(f, "d{}", a + 1),
            Letter::L(a) => write!(f, "L{}", a + 1),
            Letter::Omega(a, b) => write!(f, "O{}{}", a + 1, b + 1),
        }
    }
}

/// `Γ^I = Γ_{i1} Γ_{i2} ...`; the last letter acts first.
pub type Word = Vec<Letter>;

pub fn word_name(w: &[Letter]) -> String {
    if w.is_empty() {
        return "id".into();
    }
    w.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("*")
}

/// All ordered words of length at most `cap`, shortest first.
pub fn words_up_to(letters: &[Letter], cap: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    let mut last = vec![Vec::new()];
    for _ in 0..cap {
        let mut next = Vec::new();
        for w in &last {
            for l in letters {
                let mut x = vec![*l];
                x.extend(w.iter().copied());
                next.push(x);
            }
        }
        out.extend(next.iter().cloned());
        last = next;
    }
    out
}

/// `∂_t^k φ` for `k = 0..levels.len()` at time `t`.
#[derive(Clone, Debug)]
pub struct FieldJet<F> {
    pub t: f64,
    pub levels: Vec<F>,
}

impl<F: FieldRepr> FieldJet<F> {
    pub fn from_jet(grid: &Grid, t: f64, jet: &Jet, exec: Execution) -> Result<Self> {
        let levels =
            jet.levels.iter().map(|l| F::from_native(grid, l, exec)).collect::<Result<Vec<_>>>()?;
        Ok(Self { t, levels })
    }

    /// Jet of a source known with its first time derivative.
    pub fn from_physical(grid: &Grid, t: f64, levels: &[&[f64]], exec: Execution) -> Result<Self> {
        let levels = levels
            .iter()
            .map(|l| F::from_native(grid, &grid.to_native(l), exec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { t, levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn value(&self) -> &F {
        &self.levels[0]
    }

    pub fn apply(&self, letter: Letter) -> Result<Self> {
        let n = self.levels.len();
        if n <= letter.time_cost() {
            return Err(Error::param(
                "word",
                format!("{letter} needs {} time levels, jet has {n}", letter.time_cost() + 1),
            ));
        }
        let levels = match letter {
            Letter::Dt => self.levels[1..].to_vec(),
            Letter::D(a) => self.levels.iter().map(|f| f.deriv(a as usize)).collect(),
            Letter::Omega(a, b) => self
                .levels
                .iter()
                .map(|f| {
                    let mut o = f.deriv(b as usize).mul_coord(a as usize);
                    o.axpy(-1.0, &f.deriv(a as usize).mul_coord(b as usize));
                    o
                })
                .collect(),
            Letter::L(a) => {
                // ∂_t^k (x^a ∂_t φ + t ∂_a φ) = x^a φ_{k+1} + t ∂_a φ_k + k ∂_a φ_{k-1}
                let a = a as usize;
                let d: Vec<F> = self.levels[..n - 1].iter().map(|f| f.deriv(a)).collect();
                (0..n - 1)
                    .map(|k| {
                        let mut o = self.levels[k + 1].mul_coord(a);
                        o.axpy(self.t, &d[k]);
                        if k > 0 {
                            o.axpy(k as f64, &d[k - 1]);
                        }
                        o
                    })
                    .collect()
            }
        };
        Ok(Self { t: self.t, levels })
    }

    pub fn apply_word(&self, word: &[Letter]) -> Result<Self> {
        let mut out = self.clone();
        for l in word.iter().rev() {
            out = out.apply(*l)?;
        }
        Ok(out)
    }

    /// `(-□ + m²) φ = ∂_t² φ - Δφ + m² φ`, two levels shorter.
    pub fn klein_gordon(&self, m: f64) -> Result<Self> {
        let n = self.levels.len();
        if n < 3 {
            return Err(Error::param("jet", "the wave operator needs three time levels"));
        }
        let levels = (0..n - 2)
            .map(|k| {
                let mut o = self.levels[k + 2].clone();
                o.axpy(-1.0, &self.levels[k].laplacian());
                o.axpy(m * m, &self.levels[k]);
                o
            })
            .collect();
        Ok(Self { t: self.t, levels })
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (x, y) in self.levels.iter_mut().zip(&other.levels) {
            x.axpy(a, y);
        }
        self.levels.truncate(other.levels.len().min(self.levels.len()));
    }

    /// Flat energy `𝓔_m(t, φ) = ‖∂_t φ‖² + Σ_a ‖∂_a φ‖² + m² ‖φ‖²`.
    pub fn flat_energy(&self, m: f64) -> Result<f64> {
        if self.levels.len() < 2 {
            return Err(Error::param("jet", "flat energy needs the time derivative"));
        }
        let f = &self.levels[0];
        let grad: f64 = (0..3).map(|a| f.deriv(a).norm_sq()).sum();
        Ok(self.levels[1].norm_sq() + grad + m * m * f.norm_sq())
    }
}

/// Every word of length at most `cap` applied to `base`, sharing prefixes:
/// `Γ_1 Γ_2 φ` reuses `Γ_2 φ`.
pub fn all_word_jets<F: FieldRepr>(
    base: &FieldJet<F>,
    letters: &[Letter],
    cap: usize,
) -> Result<Vec<(Word, FieldJet<F>)>> {
    let mut out = vec![(Vec::new(), base.clone())];
    let mut last = vec![(Vec::new(), base.clone())];
    for _ in 0..cap {
        let mut next = Vec::new();
        for (w, j) in &last {
            for l in letters {
                let mut x = vec![*l];
                x.extend(w.iter().copied());
                next.push((x, j.apply(*l)?));
            }
        }
        out.extend(next.iter().cloned());
        last = next;
    }
    Ok(out)
}
