//! Picard iteration of the solution map `T`.
//!
//! `λ¹` solves the homogeneous equations with the data; `λ^{j+1}` solves the
//! linear equations with sources built from `λ^j`, with the same data. All
//! iterates advance together in time, one step at a time, and the code
//! carries the differences `D_j = λ^{j+1} - λ^j` directly:
//!
//! `D_j ← E(dt/2) [E(dt/2) D_j + (0, dt (g(H^j) - g(H^{j-1})))]`
//!
//! where `H^j = E(dt/2) λ^j` and `g` is the midpoint kick source of the
//! Strang stepper. The source differences are evaluated by telescoping so a
//! distance of `1e-12` relative to the fields is still resolved. The fixed
//! point of this discrete map is the Strang solution.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::system::history::Frame;
use crate::system::poly::ChannelSet;
use crate::system::solver::{whole_steps, Stepper};
use crate::system::state::{ModalState, SystemState};

pub type PicardSink<'a> = dyn FnMut(usize, &Grid, &Frame) -> Result<()> + 'a;

#[derive(Clone, Debug)]
pub struct PicardRun {
    pub iterations: usize,
    pub steps: usize,
    /// `λ^{n+1}` at the final time.
    pub limit: SystemState,
    /// Final-time sup norm of each `D_j`, both components.
    pub final_sup: Vec<f64>,
}

fn add_pair(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> (Vec<f64>, Vec<f64>) {
    let s = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + q).collect();
    (s(&a.0, &b.0), s(&a.1, &b.1))
}

fn zero_pair(n: usize) -> (Vec<f64>, Vec<f64>) {
    (vec![0.0; n], vec![0.0; n])
}

/// Run `n_iters` Picard iterations to `t_max`. `sink(j, grid, frame)`
/// receives the frames of `D_j` (`j = 1..=n_iters`) every `stride`.
pub fn picard_iterate(
    stepper: &Stepper,
    initial: &SystemState,
    t_max: f64,
    stride: f64,
    n_iters: usize,
    sink: &mut PicardSink<'_>,
) -> Result<PicardRun> {
    if n_iters < 2 {
        return Err(Error::param("n_iters", format!("need at least 2, got {n_iters}")));
    }
    if stepper.has_forcing() {
        return Err(Error::Unsupported("Picard iteration with external forcing".into()));
    }
    let grid = stepper.grid();
    let n = grid.len();
    let dt = stepper.dt();
    let exec = stepper.execution();
    let t0 = initial.t;
    if !(t_max > t0) {
        return Err(Error::param("t_max", format!("must exceed the initial time {t0}")));
    }
    let n_steps = whole_steps(t_max - t0, dt, "t_max")?;
    let per_frame = whole_steps(stride, dt, "stride")?;

    let mut lam1 = ModalState::from_state(grid, initial)?;
    let mut diffs: Vec<ModalState> = (0..n_iters).map(|_| lam1.zeros_like()).collect();

    let emit = |lam1: &ModalState, diffs: &[ModalState], sink: &mut PicardSink<'_>| -> Result<()> {
        // F(λ^j) accumulated as a sum of telescoped differences
        let mut lam = lam1.clone();
        let mut f_prev = zero_pair(n);
        let set = stepper.jet_channels(&lam, &f_prev);
        let mut src = stepper.nonlinearity().eval(&set, n, exec)?;
        let mut src_rate = stepper.nl_rate().eval(&set, n, exec)?;
        let mut base_set = set;
        for (j, d) in diffs.iter().enumerate() {
            if j > 0 {
                let prev = &diffs[j - 1];
                let delta_set = stepper.jet_channels(prev, &src);
                let ds = stepper.nonlinearity().eval_diff(&base_set, &delta_set, n, exec)?;
                let dsr = stepper.nl_rate().eval_diff(&base_set, &delta_set, n, exec)?;
                // advance the base from λ^{j} to λ^{j+1}
                let f_lam = add_pair(&f_prev, &src);
                lam.add_scaled(1.0, prev);
                base_set = stepper.jet_channels(&lam, &f_lam);
                f_prev = f_lam;
                src = ds;
                src_rate = dsr;
            }
            let frame = stepper.frame_from(d, src.clone(), src_rate.clone());
            sink(j + 1, grid, &frame)?;
        }
        Ok(())
    };

    emit(&lam1, &diffs, sink)?;
    for k in 1..=n_steps {
        stepper.half_flow(&mut lam1);
        for d in diffs.iter_mut() {
            stepper.half_flow(d);
        }
        // g(H^j) differences, j = 1..=n_iters
        let mut h = lam1.clone();
        let mut base: ChannelSet = stepper.channels(&h);
        let mut f_base = stepper.nonlinearity().eval(&base, n, exec)?;
        let mut kicks = Vec::with_capacity(n_iters);
        kicks.push(stepper.effective_source_from(&base, h.t)?);
        for j in 1..n_iters {
            let prev = &diffs[j - 1];
            let delta = stepper.channels(prev);
            let df = stepper.nonlinearity().eval_diff(&base, &delta, n, exec)?;
            let dg = if stepper.uses_rates() {
                let mid_base = stepper.midpoint_channels(&base, &f_base);
                let mid_delta = stepper.midpoint_channels(&delta, &df);
                stepper.nonlinearity().eval_diff(&mid_base, &mid_delta, n, exec)?
            } else {
                df.clone()
            };
            kicks.push(dg);
            h.add_scaled(1.0, prev);
            base = stepper.channels(&h);
            f_base = add_pair(&f_base, &df);
        }
        for (d, g) in diffs.iter_mut().zip(&kicks) {
            if let Some(bad) = g.0.iter().chain(&g.1).position(|x| !x.is_finite()) {
                return Err(Error::BlowUp {
                    t: d.t,
                    reason: format!("non-finite Picard source at sample {}", bad % n),
                });
            }
            let (gu, gv) = stepper.source_coeffs(g)?;
            d.u.ct.axpy(dt, &gu);
            d.v.ct.axpy(dt, &gv);
        }
        stepper.half_flow(&mut lam1);
        lam1.t = t0 + k as f64 * dt;
        for d in diffs.iter_mut() {
            stepper.half_flow(d);
            d.t = lam1.t;
        }
        if k % per_frame == 0 {
            emit(&lam1, &diffs, sink)?;
        }
    }

    let mut limit = lam1.clone();
    let mut final_sup = Vec::with_capacity(n_iters);
    for d in &diffs {
        limit.add_scaled(1.0, d);
        let st = d.to_state(grid);
        final_sup.push(grid.sup_abs(&st.u.value).max(grid.sup_abs(&st.v.value)));
    }
    Ok(PicardRun { iterations: n_iters, steps: n_steps, limit: limit.to_state(grid), final_sup })
}

/// `true` when the distances increase for three consecutive iterations.
pub fn is_diverging(distances: &[f64]) -> bool {
    distances.windows(4).any(|w| w[1] > w[0] && w[2] > w[1] && w[3] > w[2])
}
