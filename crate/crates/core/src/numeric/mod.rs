//! Numerical building blocks shared by the model layers.

pub mod interp;
pub mod quadrature;
pub mod special;
pub mod sum;

pub use quadrature::{Adaptive, GaussLegendre, Integral, Tolerance};
pub use sum::{compensated_sum, NeumaierSum};
