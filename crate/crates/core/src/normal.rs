//! Standard normal distribution helpers.

use std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal cumulative distribution function.
///
/// Evaluated through the complementary error function, which keeps full
/// relative precision in the lower tail where `1 + erf` would cancel.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}
