use crate::error::{check_len, Result};
use crate::grid::{FieldPair, Grid, SpectralCoeffs};
use crate::par::Execution;
use crate::propagator::ModalPair;
use crate::system::poly::{Channel, ChannelSet, Comp};

/// Full state `(u, ∂_t u, v, ∂_t v)` at time `t`, in native samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub u: FieldPair,
    pub v: FieldPair,
}

impl SystemState {
    pub fn zeros(grid: &Grid, t: f64) -> Self {
        Self { t, u: FieldPair::zeros(grid.len()), v: FieldPair::zeros(grid.len()) }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        check_len(grid.len(), self.u.len())?;
        check_len(grid.len(), self.v.len())?;
        Ok(())
    }

    pub fn component(&self, comp: Comp) -> &FieldPair {
        match comp {
            Comp::U => &self.u,
            Comp::V => &self.v,
        }
    }
}

/// The same state in mode space.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalState {
    pub t: f64,
    pub u: ModalPair,
    pub v: ModalPair,
}

impl ModalState {
    pub fn from_state(grid: &Grid, s: &SystemState) -> Result<Self> {
        s.validate(grid)?;
        Ok(Self {
            t: s.t,
            u: ModalPair::from_fields(grid, &s.u)?,
            v: ModalPair::from_fields(grid, &s.v)?,
        })
    }

    pub fn to_state(&self, grid: &Grid) -> SystemState {
        SystemState { t: self.t, u: self.u.to_fields(grid), v: self.v.to_fields(grid) }
    }

    pub fn zeros_like(&self) -> Self {
        Self { t: self.t, u: self.u.zeros_like(), v: self.v.zeros_like() }
    }

    pub fn component(&self, comp: Comp) -> &ModalPair {
        match comp {
            Comp::U => &self.u,
            Comp::V => &self.v,
        }
    }

    pub fn add_scaled(&mut self, a: f64, other: &ModalState) {
        self.u.axpy(a, &other.u);
        self.v.axpy(a, &other.v);
    }
}

/// Physical value and requested spatial derivatives of one field given by
/// its coefficients, inserted into `set` under `(comp, order)`.
pub(crate) fn insert_field_channels(
    grid: &Grid,
    comp: Comp,
    order: u8,
    coeffs: &SpectralCoeffs,
    need: &[Channel],
    set: &mut ChannelSet,
    exec: Execution,
) {
    let wants = |axis: Option<u8>| need.contains(&Channel { comp, order, axis });
    match (grid, coeffs) {
        (Grid::Radial(g), SpectralCoeffs::Sine(c)) => {
            let (want_v, want_g) = (wants(None), wants(Some(0)));
            if !(want_v || want_g) {
                return;
            }
            let (w, wr) = g.synth_with_slope(c);
            if want_g {
                let d = (0..g.n())
                    .map(|j| {
                        let r = g.node(j);
                        (wr[j] - w[j] / r) / r
                    })
                    .collect();
                set.insert(Channel { comp, order, axis: Some(0) }, d);
            }
            if want_v {
                set.insert(Channel { comp, order, axis: None }, g.physical(&w));
            }
        }
        (Grid::Box(g), SpectralCoeffs::Fourier(c)) => {
            if wants(None) {
                set.insert(Channel { comp, order, axis: None }, g.inverse(c, exec));
            }
            for a in 0..3u8 {
                if wants(Some(a)) {
                    let d = g.inverse(&g.derivative_coeffs(c, a as usize), exec);
                    set.insert(Channel { comp, order, axis: Some(a) }, d);
                }
            }
        }
        _ => panic!("coefficient kind does not match grid"),
    }
}

/// Channels of time order 0 and 1 for both components.
pub(crate) fn modal_channels(
    grid: &Grid,
    state: &ModalState,
    need: &[Channel],
    exec: Execution,
) -> ChannelSet {
    let mut set = ChannelSet::new();
    for comp in [Comp::U, Comp::V] {
        let m = state.component(comp);
        insert_field_channels(grid, comp, 0, &m.c, need, &mut set, exec);
        insert_field_channels(grid, comp, 1, &m.ct, need, &mut set, exec);
    }
    set
}
