//! Gravitationally bound ultracold neutrons above a mirror, and their
//! transmission through a slit capped by an absorbing ceiling.
//!
//! The crate covers the full pipeline:
//!
//! - [`potential`] — physical constants, unit conversions, and evaluable
//!   potential profiles (infinite box, gravity over a mirror, gravity with
//!   a Wood-Saxon absorber ceiling, tabulated);
//! - [`eigensolver`] — bound states of the 1D stationary Schrödinger
//!   equation by finite differences, with closed-form oracles for the box
//!   (ħ²π²n²/2ma²) and gravity (Airy-zero) cases;
//! - [`transmission`] — the geometric absorption calculus: probability
//!   weight inside the absorber, attenuation coefficient, exponential
//!   count decay along the cavity;
//! - [`analysis`] — throughput curves, mixed densities with level
//!   populations, slit-width scans, and constrained fits to measured
//!   counts.
//!
//! Everything is a pure function of its inputs; values are immutable after
//! construction and safe to share across threads.

pub mod analysis;
pub mod constants;
pub mod eigensolver;
pub mod error;
pub mod potential;
pub mod transmission;

pub use constants::PhysicalConstants;
pub use eigensolver::{solve_spectrum, EigenState, Spectrum};
pub use error::{Error, Result};
pub use potential::{Grid, PotentialSpec, PotentialValue, WoodSaxonParams};
