//! Shared numerical primitives: quadrature rules, dense eigensolvers,
//! bracketed root finding and deterministic random streams.
//!
//! Everything here is generic over [`Real`], so the same routines serve
//! `f32` and `f64` callers. The physics modules instantiate them at `f64`.

mod eigen;
mod quadrature;
mod roots;
mod stream;

pub use eigen::{
    generalized_lowest_eigen, symmetric_eigen_top, EigenConfig, EigenResult, GeneralizedEigen,
};
pub use quadrature::{gauss_legendre, semi_infinite_grid, Domain, Mapping, QuadratureGrid};
pub use roots::{find_root, find_root_with, RootConfig};
pub use stream::SeededStream;

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive};

/// Floating point scalar accepted by the numerical core.
pub trait Real: RealField + FloatConst + FromPrimitive + Copy + Send + Sync + 'static {
    /// Lossless for the constants used in this crate (f32 rounds).
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn to_f64(self) -> f64 {
        self.to_subset().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("representable count")
    }
}

impl Real for f32 {}
impl Real for f64 {}
