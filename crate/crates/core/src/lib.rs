//! Equilibria, particle-in-cell simulation and modulated-energy diagnostics
//! for confined plasmas in the quasi-neutral regime.

pub mod config;
pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod fluid;
pub mod geometry;
pub mod kinetic;
pub mod pipeline;
pub mod quadrature;
pub mod registry;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::SpaceDim;
