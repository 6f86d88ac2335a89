//! Pseudo-spectral simulator for rotating incompressible flow on a periodic
//! box, co-evolving the back-to-labels displacement, the virtual velocity and
//! the Cauchy invariant, with certified vertical-transport diagnostics.

pub mod algebra;
pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod field;
pub mod flow;
pub mod grid;
pub mod identities;
pub mod initial;
pub mod interp;
pub mod lagrangian;
pub mod par;
pub mod run;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};
pub use field::{ScalarField, TensorField3, Values, VectorField3};
pub use flow::FlowState;
pub use config::{parse_config, RunConfig};
pub use grid::Grid;
pub use initial::InitialCondition;
pub use lagrangian::{ELState, TracerSet};
pub use run::Simulation;
pub use spectral::Spectral;
