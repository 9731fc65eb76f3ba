//! Simulation and validation of Levy-field term-structure models.
//!
//! Forward rates are modelled as `F_{s,t} = μ_{s,t} + X_{s,t} (+ Y_{s,t})`
//! where `X` is a compensated jump sheet built from a Levy measure `σ` and a
//! scaling function `κ`, and `Y` an optional Gaussian field with
//! independent increments in `s`. The crate provides
//!
//! - [`levy_measure`]: the measure `σ`, its moments and Laplace-type
//!   functionals, and jump sampling;
//! - [`random_fields`]: pathwise simulation of the sheets and exact time
//!   integrals of the jump part;
//! - [`drift`]: the martingale drift surface and positivity floor;
//! - [`term_structure`]: forward/spot rates and (discounted) bond prices;
//! - [`validation`]: Monte Carlo certification of the martingale,
//!   distributional and positivity properties.

pub mod drift;
pub mod error;
pub mod levy_measure;
pub mod mc;
pub mod numeric;
pub mod random_fields;
pub mod term_structure;
pub mod validation;

pub use error::{Error, Result};
pub use levy_measure::{LevyMeasure, MeasureKind};
