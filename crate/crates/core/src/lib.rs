//! Few-boson toolkit around two-body zero-energy resonances.
//!
//! * [`numerics`]: quadrature, dense eigensolvers, root finding, seeded streams,
//!   generic over the scalar type.
//! * [`two_body`]: pair potentials, Birman-Schwinger spectra, resonance tuning,
//!   the coupling curve `B(λ)` and zero-energy wavefunctions.
//! * [`few_body`]: permutation-symmetrized correlated Gaussians for 2, 3 and 4
//!   identical bosons grown by stochastic selection.
//!
//! Units throughout: `ħ²/m = 1`, lengths in the declared potential range.

pub mod error;
pub mod few_body;
pub mod numerics;
pub mod two_body;

pub use error::{Error, Result};

pub type Grid = numerics::QuadratureGrid<f64>;
pub type Grid32 = numerics::QuadratureGrid<f32>;
pub type Eigen = numerics::EigenResult<f64>;
pub type GeneralizedEigen = numerics::GeneralizedEigen<f64>;
