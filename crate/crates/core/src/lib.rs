//! Singularity confinement workbench for asymmetric trihomographic maps.
//!
//! The crate enumerates singularity patterns, turns each into a linear system
//! of difference equations for the map's parameters, solves it exactly in
//! quasi-periodic sequences, and checks confinement by iterating the map over
//! truncated ε-series.

pub mod arith;
pub mod error;
pub mod sequences;

pub use error::{Error, Result};
pub mod catalog;
pub mod confinement;
pub mod dynamics;
pub mod patterns;
