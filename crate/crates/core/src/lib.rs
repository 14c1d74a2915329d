//! Hybridizable discontinuous Galerkin solver for linear fluid–structure
//! interaction in velocity/stress form.
//!
//! The fluid is modelled by a penalty formulation of the Stokes equations and
//! the solid by linear elastodynamics, both written as first-order systems in
//! velocity and symmetric stress. Time stepping is Crank–Nicolson and every
//! step is solved by static condensation onto the facet traces.

pub mod assembly;
pub mod basis;
pub mod benchmarks;
pub mod cli;
pub mod condense;
pub mod config;
pub mod dofs;
pub mod error;
pub mod field;
pub mod materials;
pub mod mesh;
pub mod projection;
pub mod quadrature;
pub mod reporting;
pub mod sparse;
pub mod time;
pub mod verify;

pub use error::{Error, Result};
