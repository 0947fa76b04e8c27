//! The coupled wave and Klein-Gordon system: parameters, sources, data,
//! time stepping and the drivers built on it.

pub mod data;
pub mod history;
pub mod identities;
pub mod params;
pub mod picard;
pub mod poly;
pub mod solver;
pub mod state;

pub use data::{Bump, DataSpec};
pub use identities::{divergence_decomposition_check, duhamel_replay, type2_residual, IdentitySeries};
pub use history::{Frame, FrameSink, History, Jet};
pub use picard::{is_diverging, picard_iterate, PicardRun};
pub use params::{NullForm, Preset, SystemParams};
pub use poly::{Channel, Comp, Geometry, Nonlinearity};
pub use solver::{solve_system, Forcing, RunSummary, SolverConfig, Stepper, T0};
pub use state::{ModalState, SystemState};
