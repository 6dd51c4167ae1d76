//! Zero-energy resonance tuning and the coupling curve `B(λ)` defined by
//! `μ(λ, B(λ)) = 1`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::galerkin::{top_of_reduced, GalerkinOperator, GalerkinSettings, RadialMesh};
use super::momentum::{bs_kernel, bs_top_eigenvalue};
use super::potential::{make_v_lambda, PerturbationShape, RadialPotential, Shell};
use super::zero_energy::{exterior_log_derivative, zero_energy_solution, ZeroEnergySettings};
use crate::error::{Error, Result};
use crate::numerics::{find_root, semi_infinite_grid};

/// Discretization used for `μ = sup σ(D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BsScheme {
    /// Radial spectral elements; converges to machine precision.
    Galerkin(GalerkinSettings),
    /// s-wave momentum Nyström on the rational map `p = scale t/(1-t)`.
    Momentum { nodes: usize, scale: f64 },
}

impl Default for BsScheme {
    fn default() -> Self {
        BsScheme::Galerkin(GalerkinSettings::default())
    }
}

fn indicator(shell: Shell) -> RadialPotential {
    RadialPotential::new(vec![shell], Vec::new(), shell.r_hi).expect("valid indicator shell")
}

impl BsScheme {
    pub fn mu(&self, v: &RadialPotential) -> Result<f64> {
        match *self {
            BsScheme::Galerkin(s) => Ok(super::galerkin::galerkin_top_eigenvalue(v, &s)?.mu),
            BsScheme::Momentum { nodes, scale } => {
                let grid = semi_infinite_grid(nodes, scale / v.r_v())?;
                Ok(bs_top_eigenvalue(v, &grid)?.mu)
            }
        }
    }

    /// Symmetric matrices for `D(λ, B) = base - λ chi + B eta` around the core `v0`.
    pub fn family(&self, v0: &RadialPotential, r: f64) -> Result<CouplingFamily> {
        if !(r > 0.0) {
            return Err(Error::invalid(format!(
                "perturbation radius must be positive, got {r}"
            )));
        }
        let chi = indicator(PerturbationShape::chi(r));
        let eta = indicator(PerturbationShape::eta(r));
        match *self {
            BsScheme::Galerkin(s) => {
                let mut bps = v0.breakpoints();
                bps.extend([r, 2.0 * r]);
                let op = GalerkinOperator::new(RadialMesh::new(&bps, &s)?)?;
                let base = op.reduced(v0);
                let chi_m = op.reduce(&op.mesh.weighted_mass(|x| chi.value(x)));
                let eta_m = op.reduce(&op.mesh.weighted_mass(|x| eta.value(x)));
                Ok(CouplingFamily {
                    base,
                    chi: chi_m,
                    eta: eta_m,
                    r,
                })
            }
            BsScheme::Momentum { nodes, scale } => {
                let grid = semi_infinite_grid(nodes, scale / v0.r_v())?;
                Ok(CouplingFamily {
                    base: bs_kernel(v0, &grid)?,
                    chi: -bs_kernel(&chi, &grid)?,
                    eta: -bs_kernel(&eta, &grid)?,
                    r,
                })
            }
        }
    }
}

/// `μ(λ, B)` for a fixed core and radius `R`.
#[derive(Debug, Clone)]
pub struct CouplingFamily {
    base: DMatrix<f64>,
    chi: DMatrix<f64>,
    eta: DMatrix<f64>,
    r: f64,
}

impl CouplingFamily {
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn mu(&self, lambda: f64, b: f64) -> f64 {
        let m = &self.base - &self.chi * lambda + &self.eta * b;
        top_of_reduced(&m).0
    }

    /// Solves `μ(λ, B) = 1` for `B`, any sign of `λ`.
    pub fn solve_b(&self, lambda: f64, settings: &CriticalitySettings) -> Result<f64> {
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let f = |b: f64| self.mu(lambda, b) - 1.0;
        let f0 = f(0.0);
        // repulsion on [0,R] lowers μ, so B > 0 restores it (and B < 0 for λ < 0)
        let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
        let mut hi = lambda.abs().max(1e-12);
        let mut lo = 0.0;
        loop {
            if hi > settings.b_cap {
                return Err(Error::NonPerturbative {
                    lambda,
                    cap: settings.b_cap,
                });
            }
            if (f(dir * hi) < 0.0) != (f0 < 0.0) {
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        let b = find_root(f, dir * lo, dir * hi, settings.b_tol)?;
        Ok(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalitySettings {
    pub scheme: BsScheme,
    /// Bracket width for the depth multiplier.
    pub depth_tol: f64,
    /// Bracket width for `B`.
    pub b_tol: f64,
    /// Accepted `|μ(V0) - 1|` for a core declared critical.
    pub criticality_tol: f64,
    /// Accepted `|g* μ(shape) - 1|` in the linearity cross-check.
    pub linearity_tol: f64,
    pub b_cap: f64,
    pub zero_energy: ZeroEnergySettings,
}

impl Default for CriticalitySettings {
    fn default() -> Self {
        Self {
            scheme: BsScheme::default(),
            depth_tol: 1e-13,
            b_tol: 1e-15,
            criticality_tol: 1e-8,
            linearity_tol: 1e-10,
            b_cap: 100.0,
            zero_energy: ZeroEnergySettings::default(),
        }
    }
}

/// Depth multiplier `g*` with `μ(g* shape) = 1`.
pub fn tune_critical_depth(
    shape: &RadialPotential,
    bracket: (f64, f64),
    settings: &CriticalitySettings,
) -> Result<f64> {
    let scheme = settings.scheme;
    let g = find_root(
        |g: f64| {
            scheme
                .mu(&shape.scaled(g))
                .map(|m| m - 1.0)
                .unwrap_or(f64::NAN)
        },
        bracket.0,
        bracket.1,
        settings.depth_tol,
    )?;
    let g = polish_with_ode(shape, g, settings);
    // μ is linear in V, so g* must equal 1/μ(shape)
    let mu_shape = scheme.mu(shape)?;
    let check = g * mu_shape - 1.0;
    if check.abs() > settings.linearity_tol {
        return Err(Error::Numerical(format!(
            "root-found depth {g} disagrees with 1/μ = {} (g μ - 1 = {check:e})",
            1.0 / mu_shape
        )));
    }
    Ok(g)
}

/// Secant refinement of `g` on the zero-energy exterior slope, so the radial
/// solution of the tuned core is flat beyond the support to integrator precision.
/// Keeps `g` when the slope has no sign change within `linearity_tol`.
fn polish_with_ode(shape: &RadialPotential, g: f64, settings: &CriticalitySettings) -> f64 {
    let f = |x: f64| {
        exterior_log_derivative(&shape.scaled(x), &settings.zero_energy).unwrap_or(f64::NAN)
    };
    let w = 0.5 * settings.linearity_tol * g;
    let (lo, hi) = (g - w, g + w);
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo * fhi < 0.0) {
        return g;
    }
    find_root(f, lo, hi, 1e-3 * w).unwrap_or(g)
}

/// Fails with [`Error::NotCritical`] unless `|μ(V0) - 1|` is within tolerance.
pub fn ensure_critical(family: &CouplingFamily, settings: &CriticalitySettings) -> Result<()> {
    let mu0 = family.mu(0.0, 0.0);
    if (mu0 - 1.0).abs() > settings.criticality_tol {
        return Err(Error::NotCritical(format!("μ(V0) - 1 = {:e}", mu0 - 1.0)));
    }
    Ok(())
}

/// `B(λ) >= 0` with `μ(λ, B) = 1` for a critical core.
#[allow(non_snake_case)]
pub fn solve_B_of_lambda(
    v0: &RadialPotential,
    lambda: f64,
    r: f64,
    settings: &CriticalitySettings,
) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let family = settings.scheme.family(v0, r)?;
    ensure_critical(&family, settings)?;
    family.solve_b(lambda, settings)
}

/// `B'(0) = ∫_{r<=R} ψ0² ÷ ∫_{R<r<=2R} ψ0²`, from the zero-energy solution.
pub fn b_prime_at_zero(
    v0: &RadialPotential,
    r: f64,
    settings: &CriticalitySettings,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("R must be positive, got {r}")));
    }
    let mut ze = settings.zero_energy;
    ze.r_max = ze.r_max.max(2.0 * r);
    let sol = zero_energy_solution(v0, &ze)?;
    Ok(sol.radial_norm(0.0, r) / sol.radial_norm(r, 2.0 * r))
}

/// Richardson-extrapolated `B(λ)/λ` from probes at `λ` and `λ/2`.
pub fn extrapolated_slope(
    family: &CouplingFamily,
    lambda: f64,
    settings: &CriticalitySettings,
) -> Result<f64> {
    let s1 = family.solve_b(lambda, settings)? / lambda;
    let s2 = family.solve_b(0.5 * lambda, settings)? / (0.5 * lambda);
    Ok(2.0 * s2 - s1)
}

/// Top `l = 1` eigenvalue of `V_λ`; the s-wave treatment is valid while it stays below 1.
pub fn p_wave_mu(
    v0: &RadialPotential,
    lambda: f64,
    b: f64,
    r: f64,
    settings: &CriticalitySettings,
) -> Result<f64> {
    let galerkin = match settings.scheme {
        BsScheme::Galerkin(g) => g,
        BsScheme::Momentum { .. } => GalerkinSettings::default(),
    };
    let v = make_v_lambda(v0, &PerturbationShape::new(lambda, b, r)?)?;
    Ok(super::galerkin::partial_wave_top_eigenvalue(&v, 1, &galerkin)?.mu)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingCurve {
    pub r: f64,
    pub lambda_grid: Vec<f64>,
    pub b_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub b_prime_0: f64,
}

/// `B(λ)` on a grid of couplings; rows are evaluated in parallel and kept in input order.
pub fn coupling_curve(
    v0: &RadialPotential,
    r: f64,
    lambdas: &[f64],
    settings: &CriticalitySettings,
) -> Result<CouplingCurve> {
    if lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::invalid("coupling grid must be nonnegative"));
    }
    let family = settings.scheme.family(v0, r)?;
    ensure_critical(&family, settings)?;
    let rows: Vec<Result<(f64, f64)>> = lambdas
        .par_iter()
        .map(|&l| {
            let b = family.solve_b(l, settings)?;
            Ok((b, (family.mu(l, b) - 1.0).abs()))
        })
        .collect();
    let mut b_values = Vec::with_capacity(rows.len());
    let mut residuals = Vec::with_capacity(rows.len());
    for row in rows {
        let (b, res) = row?;
        b_values.push(b);
        residuals.push(res);
    }
    Ok(CouplingCurve {
        r,
        lambda_grid: lambdas.to_vec(),
        b_values,
        residuals,
        b_prime_0: b_prime_at_zero(v0, r, settings)?,
    })
}
