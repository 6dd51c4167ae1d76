//! Two-body criticality: finite-range pair potentials, the Birman-Schwinger
//! spectrum, resonance tuning, the coupling curve `B(λ)` and the zero-energy
//! wavefunction with its `1/r` tail.

mod criticality;
mod efimov;
mod galerkin;
mod momentum;
mod potential;
mod zero_energy;

pub use criticality::{
    b_prime_at_zero, coupling_curve, ensure_critical, extrapolated_slope, p_wave_mu,
    solve_B_of_lambda, tune_critical_depth, BsScheme, CouplingCurve, CouplingFamily,
    CriticalitySettings,
};
pub use efimov::{efimov_residual, efimov_s0};
pub use galerkin::{
    galerkin_top_eigenvalue, partial_wave_top_eigenvalue, GalerkinOperator, GalerkinSettings,
    GalerkinSpectrum, RadialMesh,
};
pub use momentum::{bs_kernel, bs_top_eigenvalue, kernel_entry, BsSpectrum};
pub use potential::{
    make_v_lambda, GaussianTerm, PerturbationShape, RadialPotential, Shell, GAUSSIAN_CUTOFF_RANGES,
};
pub use zero_energy::{
    capture_integrals, exterior_log_derivative, psi0_cross_check, zero_energy_solution,
    ZeroEnergySettings, ZeroEnergySolution,
};
