//! Matrix elements between correlated Gaussians `exp(-½ xᵀ A x)` in the
//! mass-scaled Jacobi frame, three spatial components per coordinate.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use super::jacobi::JacobiFrame;
use crate::error::{Error, Result};
use crate::two_body::RadialPotential;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPattern {
    pub a: DMatrix<f64>,
}

impl GaussianPattern {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::invalid(
                "correlation matrix must be square and nonempty",
            ));
        }
        if (&a - a.transpose()).amax() > 1e-12 * a.amax() {
            return Err(Error::invalid("correlation matrix must be symmetric"));
        }
        if Cholesky::new(a.clone()).is_none() {
            return Err(Error::invalid(
                "correlation matrix must be positive definite",
            ));
        }
        Ok(Self { a })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Pattern of `g(T x)`: `Tᵀ A T`.
    pub fn transformed(&self, t: &DMatrix<f64>) -> Self {
        let m = t.transpose() * &self.a * t;
        Self {
            a: (&m + m.transpose()) * 0.5,
        }
    }
}

fn combined(
    a: &GaussianPattern,
    b: &GaussianPattern,
) -> Result<(DMatrix<f64>, Cholesky<f64, Dyn>)> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "pattern dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let m = &a.a + &b.a;
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::Numerical("A + B is not positive definite".into()))?;
    Ok((m, chol))
}

/// `(2π)^{3n/2} det(A+B)^{-3/2}`.
pub fn overlap_element(a: &GaussianPattern, b: &GaussianPattern) -> Result<f64> {
    let (_, chol) = combined(a, b)?;
    let n = a.dim() as f64;
    Ok((2.0 * PI).powf(1.5 * n) * chol.determinant().powf(-1.5))
}

/// `⟨a| -½ Σ Δ_x |b⟩ = (3/2) tr(A (A+B)^{-1} B) ⟨a|b⟩`.
pub fn kinetic_element(a: &GaussianPattern, b: &GaussianPattern) -> Result<f64> {
    let (_, chol) = combined(a, b)?;
    let ov = overlap_element(a, b)?;
    let tr = (&a.a * chol.inverse() * &b.a).trace();
    Ok(1.5 * tr * ov)
}

/// `⟨a| V(|r_i - r_j|) |b⟩`.
pub fn pair_potential_element(
    a: &GaussianPattern,
    b: &GaussianPattern,
    pair: (usize, usize),
    v: &RadialPotential,
    frame: &JacobiFrame,
) -> Result<f64> {
    let key = if pair.0 < pair.1 {
        pair
    } else {
        (pair.1, pair.0)
    };
    let w = frame
        .pair_forms
        .iter()
        .find(|(p, _)| *p == key)
        .map(|(_, w)| w)
        .ok_or_else(|| {
            Error::invalid(format!("pair {pair:?} not in a {}-particle frame", frame.n))
        })?;
    if w.len() != a.dim() {
        return Err(Error::invalid("frame and pattern dimensions differ"));
    }
    let (_, chol) = combined(a, b)?;
    let c = w.dot(&chol.solve(w));
    assert!(c > 0.0, "pair variance must be positive");
    Ok(overlap_element(a, b)? * pair_distance_average(v, c))
}

/// `E[V(|r|)]` for a 3D Gaussian `r` with covariance `c I`.
///
/// Gaussian terms are integrated without the finite-support cutoff used by
/// the two-body solvers; the difference is below `e^{-40}` of the depth.
pub fn pair_distance_average(v: &RadialPotential, c: f64) -> f64 {
    let mut acc = 0.0;
    for sh in v.shells() {
        acc += sh.height * shell_probability(sh.r_lo, sh.r_hi, c);
    }
    for g in v.gaussians() {
        acc += g.depth * (1.0 + 2.0 * c / (g.range * g.range)).powf(-1.5);
    }
    acc
}

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// `P(|r| <= R)` as a function of `x = R / sqrt(2c)`.
fn radial_cdf(x: f64) -> f64 {
    if x < 0.5 {
        // 2/√π Σ (-1)^k x^{2k+3} (2/(2k+3)) / k!
        let x2 = x * x;
        let mut term = x * x2;
        let mut sum = 0.0;
        for k in 0..30 {
            sum += term * 2.0 / (2 * k + 3) as f64;
            term *= -x2 / (k + 1) as f64;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        TWO_OVER_SQRT_PI * sum
    } else {
        libm::erf(x) - TWO_OVER_SQRT_PI * x * (-x * x).exp()
    }
}

/// `P(|r| > R)`.
fn radial_tail(x: f64) -> f64 {
    if x < 0.5 {
        1.0 - radial_cdf(x)
    } else {
        libm::erfc(x) + TWO_OVER_SQRT_PI * x * (-x * x).exp()
    }
}

/// `P(r_lo < |r| <= r_hi)` for `r ~ N(0, c I_3)`.
pub fn shell_probability(r_lo: f64, r_hi: f64, c: f64) -> f64 {
    let s = (2.0 * c).sqrt();
    let (a, b) = (r_lo / s, r_hi / s);
    if a > 1.0 {
        radial_tail(a) - radial_tail(b)
    } else {
        radial_cdf(b) - radial_cdf(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(n: usize) -> GaussianPattern {
        GaussianPattern::new(DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn unit_overlap_and_kinetic() {
        let ov = overlap_element(&eye(1), &eye(1)).unwrap();
        assert!((ov - PI.powf(1.5)).abs() < 1e-13);
        let t = kinetic_element(&eye(1), &eye(1)).unwrap();
        assert!((t - 0.75 * PI.powf(1.5)).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_patterns() {
        assert!(
            GaussianPattern::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err()
        );
        assert!(
            GaussianPattern::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).is_err()
        );
        assert!(overlap_element(&eye(1), &eye(2)).is_err());
    }

    #[test]
    fn cdf_branches_agree() {
        for &x in &[0.49, 0.5, 0.51] {
            let series = {
                let x2: f64 = x * x;
                let mut t = x * x2;
                let mut s = 0.0;
                for k in 0..40 {
                    s += t * 2.0 / (2 * k + 3) as f64;
                    t *= -x2 / (k + 1) as f64;
                }
                TWO_OVER_SQRT_PI * s
            };
            let closed = libm::erf(x) - TWO_OVER_SQRT_PI * x * (-x * x).exp();
            assert!((series - closed).abs() < 1e-15);
            assert!((radial_cdf(x) + radial_tail(x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn full_shell_is_certain() {
        assert!((shell_probability(0.0, 1e3, 0.7) - 1.0).abs() < 1e-15);
        assert!(shell_probability(8.0, 16.0, 1.0) > 0.0);
        assert!(shell_probability(40.0, 80.0, 1.0) >= 0.0);
    }

    #[test]
    fn small_ball_scales_as_cube() {
        let c = 0.8;
        let p1 = shell_probability(0.0, 1e-3, c);
        let p2 = shell_probability(0.0, 2e-3, c);
        assert!((p2 / p1 - 8.0).abs() < 1e-5);
        let exact = (4.0 / 3.0) * PI * 1e-9 / (2.0 * PI * c).powf(1.5);
        assert!((p1 / exact - 1.0).abs() < 1e-5);
    }
}
