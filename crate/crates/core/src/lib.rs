//! Numerical laboratory for the transmission eigenvalue problem with a
//! shared principal coefficient: exact disk spectra, radial Cauchy solvers,
//! Weyl counting and the Hilbert–Schmidt trace machinery.

pub mod banded;
pub mod cauchy_grid;
pub mod coeff;
pub mod disk_spectrum;
pub mod error;
pub mod halfspace;
pub mod quadrature;
pub mod specfun;
pub mod trace_lab;
pub mod weyl;

pub use cauchy_grid::{Circle, GridOptions, RadialGrid};
pub use coeff::{CoefficientField, RadialProfile, SpdMatrix};
pub use disk_spectrum::{DiskMedium, Spectrum, SpectrumEntry};
pub use error::{Result, TeigError};
pub use specfun::ScaledComplex;
pub use trace_lab::{FrozenPoint, SchemeConstants};
