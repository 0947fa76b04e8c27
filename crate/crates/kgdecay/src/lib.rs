pub mod decay;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod par;

pub use error::{Error, Result};
pub use grid::{BoxGrid, FieldPair, Grid, RadialGrid, SpectralCoeffs};
pub use par::Execution;
pub mod growth;
pub mod hyperboloidal;
pub mod propagator;
pub mod run;
pub use propagator::Mass;
pub mod system;
pub mod verify;
