//! Ground states of 2, 3 and 4 identical bosons in permutation-symmetrized
//! correlated Gaussians.

mod basis;
mod elements;
mod jacobi;
mod observables;
mod svm;

pub use basis::{
    assemble_operators, symmetrize_and_assemble, AssembledOperators, SymmetrizedGaussianBasis,
};
pub use elements::{
    kinetic_element, overlap_element, pair_distance_average, pair_potential_element,
    shell_probability, GaussianPattern,
};
pub use jacobi::{build_jacobi_frame, permutations, JacobiFrame};
pub use observables::{
    feynman_hellmann_check, feynman_hellmann_frozen, pair_indicator_expectation, CouplingPath,
    FeynmanHellmann, FrozenProblem, DEGENERACY_THRESHOLD, FROZEN_REGULARIZATION,
};
pub use svm::{ground_state, svm_grow, EnergyResult, SvmSettings};
