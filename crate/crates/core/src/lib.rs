//! Multi-vortex solutions of the non-Abelian BPS vortex equations on the plane
//! and on doubly periodic domains.

pub mod cli;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod fields;
pub mod fixedpoint;
pub mod sampling;
pub mod setup;
pub mod variational;

pub use energy::{EnergyBreakdown, Geometry, Problem, StatePair, Variant};
pub use error::{Error, Result};
pub use fields::{Grid, PlaneGrid, ScalarField, TorusGrid};
pub use setup::{check_existence, ModelTag, PhysicalParams, ThresholdReport, VortexConfig};
pub use variational::{solve, Solution, SolverSettings};
