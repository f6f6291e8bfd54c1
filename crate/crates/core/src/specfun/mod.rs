//! Special functions with overflow-safe scaling.

mod bessel;
mod scaled;

pub use bessel::{bessel_j, entire_j, EntireBesselPair, ACCURACY_THRESHOLD};
pub(crate) use bessel::entire_j_block;
pub use scaled::ScaledComplex;

