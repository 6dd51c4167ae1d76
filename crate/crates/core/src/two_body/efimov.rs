use std::f64::consts::PI;

use crate::numerics::find_root;

/// `s - (8/√3) sinh(πs/6) / cosh(πs/2)`; the Efimov exponent is its positive root.
pub fn efimov_residual(s: f64) -> f64 {
    s - 8.0 / 3f64.sqrt() * (PI * s / 6.0).sinh() / (PI * s / 2.0).cosh()
}

/// Positive root of `s = (8/√3) sinh(πs/6) / cosh(πs/2)`, about 1.00624.
pub fn efimov_s0() -> f64 {
    // residual is negative just above 0 and positive by s = 2
    find_root(efimov_residual, 0.5, 2.0, 1e-15).expect("bracket straddles the root")
}
