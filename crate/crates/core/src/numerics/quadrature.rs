use serde::{Deserialize, Serialize};

use super::Real;
use crate::error::{Error, Result};

/// Integration domain of a [`QuadratureGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain<T> {
    Finite {
        lower: T,
        upper: T,
    },
    /// `[lower, +inf)`.
    SemiInfinite {
        lower: T,
    },
}

/// Change of variables applied to the underlying Gauss-Legendre rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mapping<T> {
    /// Affine map of `[-1, 1]` onto a finite interval.
    Affine,
    /// `p = scale * t / (1 - t)` for `t` in `(0, 1)`.
    Rational { scale: T },
}

/// Nodes and positive weights of a quadrature rule, sorted by abscissa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    domain: Domain<T>,
    mapping: Mapping<T>,
}

impl<T: Real> QuadratureGrid<T> {
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn domain(&self) -> Domain<T> {
        self.domain
    }

    pub fn mapping(&self) -> Mapping<T> {
        self.mapping
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_semi_infinite(&self) -> bool {
        matches!(self.domain, Domain::SemiInfinite { .. })
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    /// Same rule family with twice as many nodes.
    pub fn refined(&self) -> Result<Self> {
        let n = 2 * self.len();
        match (self.domain, self.mapping) {
            (Domain::Finite { lower, upper }, _) => gauss_legendre(n, lower, upper),
            (Domain::SemiInfinite { .. }, Mapping::Rational { scale }) => {
                semi_infinite_grid(n, scale)
            }
            (Domain::SemiInfinite { .. }, Mapping::Affine) => Err(Error::invalid(
                "semi-infinite grid without a rational mapping",
            )),
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
fn legendre_rule<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let one = T::one();
    let two = T::lit(2.0);
    let nf = T::from_usize_lossy(n);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess, then Newton on P_n.
        let k = T::from_usize_lossy(i + 1);
        let mut x = (T::pi() * (k - T::lit(0.25)) / (nf + T::lit(0.5))).cos();
        let mut dp = one;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::default_epsilon() * T::lit(4.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = two / ((one - x * x) * dp * dp);
        // x is descending in i; fill from both ends.
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let one = T::one();
    let mut p0 = one;
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - one) * x * p1 - (kf - one) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (one, T::zero());
    }
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - one);
    (p1, d)
}

/// `n`-point Gauss-Legendre rule on `[a, b]`; exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre<T: Real>(n: usize, a: T, b: T) -> Result<QuadratureGrid<T>> {
    if n == 0 {
        return Err(Error::invalid("gauss_legendre needs at least one node"));
    }
    if !(a < b) {
        return Err(Error::invalid(format!(
            "gauss_legendre bounds must satisfy a < b (got {} and {})",
            a.to_f64(),
            b.to_f64()
        )));
    }
    let (t, w) = legendre_rule::<T>(n);
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    Ok(QuadratureGrid {
        nodes: t.iter().map(|&t| mid + half * t).collect(),
        weights: w.iter().map(|&w| half * w).collect(),
        domain: Domain::Finite { lower: a, upper: b },
        mapping: Mapping::Affine,
    })
}

/// `n`-point rule on `(0, inf)` from Gauss-Legendre on `(0, 1)` mapped by
/// `p = scale * t / (1 - t)`; weights carry the Jacobian `scale / (1 - t)^2`.
pub fn semi_infinite_grid<T: Real>(n: usize, scale: T) -> Result<QuadratureGrid<T>> {
    if n < 2 {
        return Err(Error::invalid(
            "semi_infinite_grid needs at least two nodes",
        ));
    }
    if !(scale > T::zero()) {
        return Err(Error::invalid(format!(
            "semi_infinite_grid scale must be positive (got {})",
            scale.to_f64()
        )));
    }
    let (t, w) = legendre_rule::<T>(n);
    let half = T::lit(0.5);
    let one = T::one();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (&t, &w) in t.iter().zip(&w) {
        let t = half * (t + one);
        let w = half * w;
        let om = one - t;
        nodes.push(scale * t / om);
        weights.push(w * scale / (om * om));
    }
    Ok(QuadratureGrid {
        nodes,
        weights,
        domain: Domain::SemiInfinite { lower: T::zero() },
        mapping: Mapping::Rational { scale },
    })
}
