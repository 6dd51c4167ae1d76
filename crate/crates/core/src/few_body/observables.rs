//! Pair-operator expectations and frozen-basis Feynman-Hellmann checks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::{assemble_operators, SymmetrizedGaussianBasis};
use super::svm::{svm_grow, SvmSettings};
use crate::error::{Error, Result};
use crate::numerics::{generalized_lowest_eigen, GeneralizedEigen};
use crate::two_body::{
    b_prime_at_zero, make_v_lambda, CriticalitySettings, PerturbationShape, RadialPotential, Shell,
};

/// Relative pivot threshold for frozen-basis solves.
pub const FROZEN_REGULARIZATION: f64 = 1e-9;
/// Smallest accepted gap between the two lowest Ritz values.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

fn unit_shell(r_lo: f64, r_hi: f64) -> Result<RadialPotential> {
    RadialPotential::new(
        vec![Shell {
            r_lo,
            r_hi,
            height: 1.0,
        }],
        Vec::new(),
        r_hi,
    )
}

fn quadratic(m: &DMatrix<f64>, c: &DVector<f64>) -> f64 {
    c.dot(&(m * c))
}

/// `⟨ψ| 1[r_lo < |r_1 - r_2| <= r_hi] |ψ⟩ / ⟨ψ|ψ⟩`. Use `f64::INFINITY` for an open upper end.
pub fn pair_indicator_expectation(
    basis: &SymmetrizedGaussianBasis,
    coefficients: &[f64],
    region: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = region;
    if !(lo >= 0.0 && lo < hi) {
        return Err(Error::invalid(format!(
            "region needs 0 <= r_lo < r_hi, got {region:?}"
        )));
    }
    if coefficients.len() != basis.len() {
        return Err(Error::invalid("coefficient count differs from basis size"));
    }
    let c = DVector::from_column_slice(coefficients);
    if hi.is_infinite() {
        if lo == 0.0 {
            return Ok(1.0);
        }
        let inner = pair_indicator_expectation(basis, coefficients, (0.0, lo))?;
        return Ok(1.0 - inner);
    }
    let ops = assemble_operators(basis, &[unit_shell(lo, hi)?])?;
    let pairs = (basis.n * (basis.n - 1) / 2) as f64;
    Ok(quadratic(&ops.pair_sums[0], &c) / (pairs * quadratic(&ops.overlap, &c)))
}

/// How `V_λ` moves away from the core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingPath {
    /// `V0 + λ chi_R - slope λ eta_R`.
    Linear { r: f64, slope: f64 },
    /// `V0 + λ chi_R - B(λ) eta_R` with `B` keeping the pair critical.
    Critical {
        r: f64,
        settings: CriticalitySettings,
    },
}

impl CouplingPath {
    pub fn r(&self) -> f64 {
        match *self {
            CouplingPath::Linear { r, .. } | CouplingPath::Critical { r, .. } => r,
        }
    }
}

/// Ingredients of `E(λ)` for one basis held fixed.
#[derive(Debug, Clone)]
pub struct FrozenProblem {
    pub basis: SymmetrizedGaussianBasis,
    pub overlap: DMatrix<f64>,
    /// `T + Σ_pairs V0`.
    pub core: DMatrix<f64>,
}

impl FrozenProblem {
    pub fn new(basis: SymmetrizedGaussianBasis, v0: &RadialPotential) -> Result<Self> {
        let ops = assemble_operators(&basis, std::slice::from_ref(v0))?;
        Ok(Self {
            core: &ops.kinetic + &ops.pair_sums[0],
            overlap: ops.overlap,
            basis,
        })
    }

    /// `Σ_pairs 1[lo < r <= hi]` over the basis.
    pub fn pair_indicator(&self, lo: f64, hi: f64) -> Result<DMatrix<f64>> {
        Ok(assemble_operators(&self.basis, &[unit_shell(lo, hi)?])?
            .pair_sums
            .remove(0))
    }

    /// Lowest Ritz pair of `core + extra`.
    pub fn lowest(&self, extra: &DMatrix<f64>) -> Result<GeneralizedEigen<f64>> {
        generalized_lowest_eigen(&(&self.core + extra), &self.overlap, FROZEN_REGULARIZATION)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeynmanHellmann {
    /// `[E(λ0 + h) - E(λ0 - h)] / 2h`.
    pub fd_slope: f64,
    /// `(N(N-1)/2) [⟨chi_R⟩ - B'(λ0) ⟨eta_R⟩]` for one pair.
    pub fh_value: f64,
    pub energy: f64,
    pub gap: f64,
    /// Single-pair `⟨chi_R(r_12)⟩` and `⟨eta_R(r_12)⟩` at `λ0`.
    pub capture: f64,
    pub shell: f64,
    /// `B'(λ0)` used in `fh_value`.
    pub b_prime: f64,
}

/// Grows a basis at `V_{λ0}` and runs [`feynman_hellmann_frozen`] on it.
pub fn feynman_hellmann_check(
    n: usize,
    v0: &RadialPotential,
    path: &CouplingPath,
    lambda0: f64,
    h: f64,
    svm: &SvmSettings,
) -> Result<FeynmanHellmann> {
    let (v_at, _) = path_potential(v0, path, lambda0)?;
    let (basis, _) = svm_grow(n, &v_at, svm)?;
    let frozen = FrozenProblem::new(basis, v0)?;
    feynman_hellmann_frozen(&frozen, v0, path, lambda0, h)
}

/// `(V_λ, B(λ))` along the path.
fn path_potential(
    v0: &RadialPotential,
    path: &CouplingPath,
    lambda: f64,
) -> Result<(RadialPotential, f64)> {
    let r = path.r();
    let b = match path {
        CouplingPath::Linear { slope, .. } => slope * lambda,
        CouplingPath::Critical { settings, .. } => {
            let family = settings.scheme.family(v0, r)?;
            crate::two_body::ensure_critical(&family, settings)?;
            family.solve_b(lambda, settings)?
        }
    };
    Ok((
        make_v_lambda(v0, &PerturbationShape::new(lambda, b, r)?)?,
        b,
    ))
}

/// Frozen-basis comparison of the central difference of `E(λ)` with the
/// pair-expectation formula, both in the subspace spanned by `frozen`.
pub fn feynman_hellmann_frozen(
    frozen: &FrozenProblem,
    v0: &RadialPotential,
    path: &CouplingPath,
    lambda0: f64,
    h: f64,
) -> Result<FeynmanHellmann> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("step h must be positive, got {h}")));
    }
    let r = path.r();
    let chi = frozen.pair_indicator(0.0, r)?;
    let eta = frozen.pair_indicator(r, 2.0 * r)?;
    let b_of = |lambda: f64| -> Result<f64> { Ok(path_potential(v0, path, lambda)?.1) };
    let energy_at = |lambda: f64, b: f64| -> Result<GeneralizedEigen<f64>> {
        frozen.lowest(&(&chi * lambda - &eta * b))
    };

    let b0 = b_of(lambda0)?;
    let centre = energy_at(lambda0, b0)?;
    let gap = centre.gap.unwrap_or(f64::INFINITY);
    if gap < DEGENERACY_THRESHOLD {
        return Err(Error::Degenerate {
            gap,
            threshold: DEGENERACY_THRESHOLD,
        });
    }
    let plus = energy_at(lambda0 + h, b_of(lambda0 + h)?)?;
    let minus = energy_at(lambda0 - h, b_of(lambda0 - h)?)?;
    let fd_slope = (plus.energy - minus.energy) / (2.0 * h);

    let b_prime = match path {
        CouplingPath::Linear { slope, .. } => *slope,
        CouplingPath::Critical { settings, .. } => {
            let (v_at, _) = path_potential(v0, path, lambda0)?;
            b_prime_at_zero(&v_at, r, settings)?
        }
    };
    let c = &centre.coefficients;
    let norm = quadratic(&frozen.overlap, c);
    let pairs = (frozen.basis.n * (frozen.basis.n - 1) / 2) as f64;
    let capture = quadratic(&chi, c) / (pairs * norm);
    let shell = quadratic(&eta, c) / (pairs * norm);
    Ok(FeynmanHellmann {
        fd_slope,
        fh_value: pairs * (capture - b_prime * shell),
        energy: centre.energy,
        gap,
        capture,
        shell,
        b_prime,
    })
}
