//! Constellation design for multi-color (RGB LED) visible light links.
//!
//! The crate designs intensity constellations that maximize the minimum
//! Euclidean distance under average-color, nonnegativity, and per-LED PAPR
//! constraints, optionally through an SVD pre-equalized cross-talk channel.
//! It also optimizes bit labelings with the binary switching algorithm and
//! measures BER by seeded Monte Carlo simulation.

pub mod baselines;
pub mod channel;
pub mod cli;
pub mod designer;
pub mod error;
pub mod labeling;
pub mod linprog;
pub mod model;
pub mod reference;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
