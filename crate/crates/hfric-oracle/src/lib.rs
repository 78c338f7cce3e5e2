//! Independent ground truth for the effective dynamics: the particle and the
//! fluctuation field evolved together in wavenumber space, with the free
//! propagator applied exactly.

pub mod error;
pub mod field;
pub mod grid;
pub mod simulate;

pub use error::{OracleError, Result};
pub use field::{init_field, Medium, SpectralField, Stepper};
pub use grid::{GridSpec, NodeSet};
pub use simulate::{compare_with_effective, deviation, refinement_study, simulate, Comparison, OracleConfig, OracleRecord, OracleRun, RefinementStudy};
