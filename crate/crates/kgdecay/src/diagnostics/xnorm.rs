//! Discrete X-norm of a pair `(u, v)`:
//!
//! `sup_t Σ_{|I| ≤ N} [𝓔₁(t, Γ^I u) + t^{-δ} 𝓔₁(t, Γ^I v)]`
//! `+ sup_s Σ_{|J| ≤ N-1} [E_m(s, Γ^J u)^{1/2} + s^{-δ} E₁(s, Γ^J v)^{1/2}]`
//!
//! The flat block sums energies and the hyperboloidal block sums their
//! square roots. The two blocks are kept apart in the output because they
//! scale differently with the amplitude.

use serde::Serialize;

use crate::diagnostics::energy::{hyperboloidal_energy, word_energy_sum, Functional};
use crate::diagnostics::words::{words_up_to, Letter};
use crate::error::{Error, Result};
use crate::field::FieldRepr;
use crate::grid::Grid;
use crate::hyperboloidal::{Quantity, SliceSampler};
use crate::par::Execution;
use crate::system::history::{Frame, FrameSink};
use crate::system::picard::{picard_iterate, PicardRun};
use crate::system::poly::Comp;
use crate::system::solver::Stepper;
use crate::system::state::SystemState;

pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct XNormConfig {
    /// Derivative cap `N`, at most 2.
    pub cap: usize,
    pub delta: f64,
    /// Mass of `u` in the hyperboloidal block.
    pub m: f64,
    /// Slices of the hyperboloidal block; empty skips it.
    pub s_values: Vec<f64>,
}

impl XNormConfig {
    pub fn new(m: f64, s_values: Vec<f64>) -> Self {
        Self { cap: 2, delta: DEFAULT_DELTA, m, s_values }
    }

    fn validate(&self) -> Result<()> {
        if self.cap > 2 {
            return Err(Error::param("cap", format!("at most 2, got {}", self.cap)));
        }
        if !(self.delta >= 0.0 && self.delta < 0.1) {
            return Err(Error::param("delta", format!("need 0 <= delta < 0.1, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct XNorm {
    pub flat: f64,
    pub hyperboloidal: f64,
    pub flat_series: Vec<(f64, f64)>,
    pub hyperboloidal_series: Vec<(f64, f64)>,
}

impl XNorm {
    pub fn total(&self) -> f64 {
        self.flat + self.hyperboloidal
    }
}

pub struct XNormAccumulator<F> {
    cfg: XNormConfig,
    exec: Execution,
    flat: Vec<(f64, f64)>,
    sampler: Option<SliceSampler<F>>,
    hyp_words: Vec<Vec<Letter>>,
}

impl<F: FieldRepr> XNormAccumulator<F> {
    /// `stride` is the spacing of the frames that will be streamed in.
    pub fn new(grid: &Grid, cfg: XNormConfig, stride: f64, exec: Execution) -> Result<Self> {
        cfg.validate()?;
        let hyp_words = if cfg.cap == 0 { Vec::new() } else { words_up_to(&Letter::all(), cfg.cap - 1) };
        let sampler = if cfg.s_values.is_empty() || hyp_words.is_empty() {
            None
        } else {
            let q = hyp_words
                .iter()
                .flat_map(|w| [Quantity::field(Comp::U, w.clone(), true), Quantity::field(Comp::V, w.clone(), true)])
                .collect();
            Some(SliceSampler::new(grid, &cfg.s_values, q, stride, exec)?)
        };
        Ok(Self { cfg, exec, flat: Vec::new(), sampler, hyp_words })
    }

    fn add(&mut self, grid: &Grid, frame: &Frame) -> Result<()> {
        let eu = word_energy_sum::<F>(grid, frame, Comp::U, 1.0, self.cfg.cap, self.exec)?;
        let ev = word_energy_sum::<F>(grid, frame, Comp::V, 1.0, self.cfg.cap, self.exec)?;
        self.flat.push((frame.t, eu + frame.t.powf(-self.cfg.delta) * ev));
        if let Some(s) = self.sampler.as_mut() {
            s.accept(grid, frame)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<XNorm> {
        if self.flat.is_empty() {
            return Err(Error::param("history", "no frames were recorded"));
        }
        let flat = self.flat.iter().map(|p| p.1).fold(0.0, f64::max);
        let mut hyp = Vec::new();
        if let Some(s) = self.sampler {
            for sl in s.finish()? {
                let mut acc = 0.0;
                for w in &self.hyp_words {
                    let fu = sl.get(&Quantity::field(Comp::U, w.clone(), true))?;
                    let fv = sl.get(&Quantity::field(Comp::V, w.clone(), true))?;
                    acc += hyperboloidal_energy(&sl, fu, self.cfg.m, Functional::Form1)?.max(0.0).sqrt();
                    acc += sl.s().powf(-self.cfg.delta)
                        * hyperboloidal_energy(&sl, fv, 1.0, Functional::Form1)?.max(0.0).sqrt();
                }
                hyp.push((sl.s(), acc));
            }
        }
        let hyperboloidal = hyp.iter().map(|p| p.1).fold(0.0, f64::max);
        Ok(XNorm { flat, hyperboloidal, flat_series: self.flat, hyperboloidal_series: hyp })
    }
}

impl<F: FieldRepr> FrameSink for XNormAccumulator<F> {
    fn accept(&mut self, grid: &Grid, frame: &Frame) -> Result<()> {
        self.add(grid, frame)
    }
}

/// Picard iteration with `d_j = X(λ^{j+1} - λ^j)` measured for every `j`.
pub fn picard_distances<F: FieldRepr>(
    stepper: &Stepper,
    initial: &SystemState,
    t_max: f64,
    stride: f64,
    n_iters: usize,
    cfg: &XNormConfig,
) -> Result<(PicardRun, Vec<XNorm>)> {
    let grid = stepper.grid().clone();
    let exec = stepper.execution();
    let mut acc: Vec<XNormAccumulator<F>> = (0..n_iters)
        .map(|_| XNormAccumulator::new(&grid, cfg.clone(), stride, exec))
        .collect::<Result<_>>()?;
    let run = picard_iterate(stepper, initial, t_max, stride, n_iters, &mut |j, g, f| acc[j - 1].accept(g, f))?;
    let norms = acc.into_iter().map(|a| a.finish()).collect::<Result<Vec<_>>>()?;
    Ok((run, norms))
}
