//! Seeded synthetic overtaking scenarios on a straight five-lane highway.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`sampler`] draws randomized initial conditions from a seed.
//! 2. [`sim`] integrates the kinematics and writes a [`log::SimulationLog`].
//! 3. [`detector`] recovers the manoeuvre stages and labels each run.
//! 4. [`features`] turns each labeled run into one feature row.
//! 5. [`analytics`] computes per-class statistics, associations and
//!    feature rankings.
//! 6. [`io`] persists every artifact; [`pipeline`] wires the stages to a
//!    run directory.

pub mod analytics;
pub mod config;
pub mod detector;
pub mod domain;
pub mod error;
pub mod features;
pub mod io;
pub mod log;
pub mod pipeline;
pub mod sampler;
pub mod sim;

pub use error::{Error, Result};
