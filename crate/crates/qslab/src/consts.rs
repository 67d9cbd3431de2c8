//! Shared numeric constants.
//!
//! Exact quantities live in big rationals elsewhere; everything here involves
//! `pi`, `ln`, or a square root and is therefore carried in `f64`, which has
//! roughly eleven digits of headroom over the four-decimal constants the
//! checks reproduce.

use std::f64::consts::PI;

/// Euler-Mascheroni constant, 50 decimal digits (rounds into f64).
pub const EULER_GAMMA: f64 = 0.57721566490153286060651209008240243104215933593992;

/// Variance of the limit law: `sigma^2 = 7 - (2/3) pi^2 ~= 0.4203`.
pub const SIGMA_SQ: f64 = 7.0 - 2.0 * PI * PI / 3.0;

/// Standard deviation of the limit law.
pub fn sigma() -> f64 {
    SIGMA_SQ.sqrt()
}

/// Coefficient of the `1/n` bound on the L2 toll error:
/// `3 + 2 pi / sqrt(3) < 6.63`.
pub fn toll_error_coefficient() -> f64 {
    3.0 + 2.0 * PI / 3.0_f64.sqrt()
}

/// Square of [`toll_error_coefficient`]; strictly below 44.
pub fn toll_error_coefficient_sq() -> f64 {
    let c = toll_error_coefficient();
    c * c
}

/// The transcendental constants used throughout, bundled for reporting.
#[derive(Clone, Copy, Debug)]
pub struct GlobalConstants {
    /// `7 - (2/3) pi^2`
    pub sigma2: f64,
    /// Euler-Mascheroni constant
    pub gamma: f64,
}

impl GlobalConstants {
    pub fn standard() -> Self {
        GlobalConstants {
            sigma2: SIGMA_SQ,
            gamma: EULER_GAMMA,
        }
    }

    /// Sanity window on `sigma^2`.
    pub fn is_valid(&self) -> bool {
        0.4202 < self.sigma2 && self.sigma2 < 0.4204
    }
}
