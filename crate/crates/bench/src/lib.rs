//! Shared fixtures for the benchmarks.

use num_complex::Complex64;
use teig::cauchy_grid::RadialGrid;
use teig::coeff::CoefficientField;
use teig::disk_spectrum::DiskMedium;

/// Unit disk, `a = 1`, `Σ = (1, 4)`.
pub fn reference_field() -> CoefficientField {
    CoefficientField::constant(1.0, 1.0, 1.0, 4.0, 10.0)
}

pub fn reference_medium() -> DiskMedium {
    DiskMedium::new(1.0, 1.0, 4.0, 1.0).expect("valid medium")
}

/// `r^m cos(πr/2R)` on the grid.
pub fn smooth_data(grid: &RadialGrid, mode: u32) -> Vec<Complex64> {
    let k = std::f64::consts::FRAC_PI_2 / grid.radius;
    grid.sample(|r| Complex64::new((r / grid.radius).powi(mode as i32) * (k * r).cos(), 0.0))
}
