//! Numerical laboratory for eigenstates of disordered periodic-well potentials
//! in two dimensions: Anderson localization, scarring and level statistics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod config;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod observables;
pub mod potential;
pub mod run;
pub mod schema;
pub mod spectral;
pub mod sweep;
pub mod tb;

pub use error::{Error, Result};
