//! Simulation and analysis toolkit for a handheld, single-axis haptic device
//! that renders inertia, damping and elasticity changes with a scissored-pair
//! control moment gyroscope.
//!
//! The simulation path is
//! swing trajectory → [`sensing`] → [`impedance`] → [`cmg`] (with [`plant`]
//! available for free-response studies), driven by [`harness`].
//! [`sdanalysis`] is the semantic-differential rating pipeline: repetition
//! averaging, correlation, scree, factor extraction, varimax, factor scores.

pub mod cmg;
pub mod config;
pub mod error;
pub mod harness;
pub mod impedance;
pub mod plant;
pub mod sdanalysis;
pub mod sensing;

pub use error::{Error, Result};
