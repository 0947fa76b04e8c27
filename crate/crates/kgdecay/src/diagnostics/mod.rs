//! Energies, vector fields, commutator checks, inequality monitors and the
//! discrete X-norm.

pub mod commutators;
pub mod energy;
pub mod ratios;
pub mod xnorm;
pub mod words;

pub use commutators::{commutator_battery, test_battery, CommutatorCheck, TestField};
pub use words::{all_word_jets, word_name, words_up_to, FieldJet, Letter, Word};
pub use energy::{energy_forms, injected_slice, energy_inequality_slack, flat_energy, hyperboloidal_energy, EnergyReport, Functional, SlackPoint};
pub use ratios::{hardy_ratio, log_slope, sobolev_quantities, sobolev_ratio, KsMonitor, RatioPoint};
pub use xnorm::{picard_distances, XNorm, XNormAccumulator, XNormConfig};
