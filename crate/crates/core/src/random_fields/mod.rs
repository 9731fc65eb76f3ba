//! Sample paths of the compensated Lévy sheet and of the Gaussian field of
//! the mixed model, with exact pathwise time integrals for the jump part.

pub mod gaussian;
pub mod scaling;
pub mod sheet;

pub use gaussian::{simulate_brownian_sheet, GaussianRealization, GaussianSource, Grid, UserGridCovariance};
pub use scaling::{ScalingFunction, ScalingKind, Weight};
pub use sheet::{simulate_sheet, Atom, Domain, SheetRealization, SheetSimulator};
