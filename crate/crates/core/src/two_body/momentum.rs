//! s-wave momentum-space Nyström discretization of the Birman-Schwinger
//! operator `-(-Δ)^{-1/2} V (-Δ)^{-1/2}`.
//!
//! With radial waves `sqrt(2/π) sin(pr)/r` the kernel is
//! `K(p, q) = -(2/π) (pq)^{-1} ∫ sin(pr) V(r) sin(qr) dr`, bounded as `p, q -> 0`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::potential::RadialPotential;
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, symmetric_eigen_top, EigenConfig};
use crate::Grid;

/// `(sin x - x cos x) / x^3`.
fn s2(x: f64) -> f64 {
    if x.abs() < 0.2 {
        let x2 = x * x;
        1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0 - x2 * x2 * x2 / 45_360.0
            + x2 * x2 * x2 * x2 / 3_991_680.0
    } else {
        (x.sin() - x * x.cos()) / (x * x * x)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `sinh(x) / x`.
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

const MEAN_NODES: [(f64, f64); 5] = [
    (0.148_874_338_981_631_2, 0.295_524_224_714_752_9),
    (0.433_395_394_129_247_2, 0.269_266_719_309_996_4),
    (0.679_409_568_299_024_4, 0.219_086_362_515_982_0),
    (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (0.973_906_528_517_171_7, 0.066_671_344_308_688_1),
];

/// `(pq)^{-1} ∫_0^r sin(ps) sin(qs) ds` without cancellation for small `p` or `q`.
pub(crate) fn sin_product_over_pq(p: f64, q: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let m = p.min(q);
    if 2.0 * m * r < 1.0 {
        // 2 r^3 / (xu + xv) * mean of x s2(x) over [xu, xv]
        let xu = (p - q).abs() * r;
        let xv = (p + q) * r;
        let mid = 0.5 * (xu + xv);
        let half = 0.5 * (xv - xu);
        let mut mean = 0.0;
        for &(t, w) in &MEAN_NODES {
            for x in [mid - half * t, mid + half * t] {
                mean += 0.5 * w * x * s2(x);
            }
        }
        if xu + xv == 0.0 {
            return r * r * r / 3.0;
        }
        2.0 * r * r * r * mean / (xu + xv)
    } else {
        let d = p - q;
        let s = p + q;
        (0.5 * r * sinc(d * r) - (s * r).sin() / (2.0 * s)) / (p * q)
    }
}

/// Kernel `K(p, q)` of the Birman-Schwinger operator for `v`.
pub fn kernel_entry(v: &RadialPotential, p: f64, q: f64) -> f64 {
    let mut acc = 0.0;
    for sh in v.shells() {
        let g = sin_product_over_pq(p, q, sh.r_hi) - sin_product_over_pq(p, q, sh.r_lo);
        acc += sh.height * g;
    }
    for g in v.gaussians() {
        // ∫ sin(pr) sin(qr) e^{-r²/ρ²} dr = (√π ρ / 4)(e^{-(p-q)²ρ²/4} - e^{-(p+q)²ρ²/4})
        let rho2 = g.range * g.range;
        let x = 0.5 * p * q * rho2;
        let val = if x < 20.0 {
            0.25 * PI.sqrt() * g.range * rho2 * (-(p * p + q * q) * rho2 / 4.0).exp() * sinhc(x)
        } else {
            let d = p - q;
            let s = p + q;
            0.25 * PI.sqrt() * g.range * ((-d * d * rho2 / 4.0).exp() - (-s * s * rho2 / 4.0).exp())
                / (p * q)
        };
        acc += g.depth * val;
    }
    -(2.0 / PI) * acc
}

/// Symmetric Nyström matrix `sqrt(w_i) K(p_i, p_j) sqrt(w_j)`.
pub fn bs_kernel(v: &RadialPotential, grid: &Grid) -> Result<DMatrix<f64>> {
    if !grid.is_semi_infinite() {
        return Err(Error::invalid(
            "Birman-Schwinger kernel needs a semi-infinite momentum grid",
        ));
    }
    if v.is_empty() {
        return Err(Error::invalid("potential has no terms"));
    }
    let p = grid.nodes();
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let n = p.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let k = sw[i] * kernel_entry(v, p[i], p[j]) * sw[j];
            m[(i, j)] = k;
            m[(j, i)] = k;
        }
    }
    Ok(m)
}

/// Top of the discretized Birman-Schwinger spectrum.
#[derive(Debug, Clone)]
pub struct BsSpectrum {
    pub grid: Grid,
    pub mu: f64,
    /// `phi0(p_i)`, normalized so `Σ w_i phi0_i² = 1`, sign chosen with positive sum.
    pub phi0: Vec<f64>,
    pub kernel_dim: usize,
    pub potential: RadialPotential,
}

impl BsSpectrum {
    pub fn rayleigh_quotient(&self) -> Result<f64> {
        let m = bs_kernel(&self.potential, &self.grid)?;
        let x: nalgebra::DVector<f64> = nalgebra::DVector::from_iterator(
            self.phi0.len(),
            self.phi0
                .iter()
                .zip(self.grid.weights())
                .map(|(f, w)| f * w.sqrt()),
        );
        Ok(x.dot(&(&m * &x)) / x.dot(&x))
    }

    /// `psi0(r) = (-Δ)^{-1/2} phi0` at radius `r`, using the eigen-equation to
    /// interpolate `phi0` between nodes; the radial momentum integral is then
    /// done analytically.
    pub fn psi0_at(&self, r: f64) -> f64 {
        let q = self.grid.nodes();
        let w = self.grid.weights();
        let mut acc = 0.0;
        for j in 0..q.len() {
            acc += w[j] * self.phi0[j] * green_moment(&self.potential, q[j], r);
        }
        // -(1/r) ∫ V(s) sin(qs) min(r,s) ds / q, scaled by sqrt(2/π)/mu
        -(2.0 / PI).sqrt() * acc / (self.mu * r)
    }
}

/// `q^{-1} ∫ V(s) sin(qs) min(r, s) ds`.
fn green_moment(v: &RadialPotential, q: f64, r: f64) -> f64 {
    let mut acc = 0.0;
    for sh in v.shells() {
        let (a, b) = (sh.r_lo, sh.r_hi);
        let c = r.clamp(a, b);
        // s < r part: ∫ s sin(qs) ds / q = s³ s2(qs)
        let inner = c * c * c * s2(q * c) - a * a * a * s2(q * a);
        // s > r part: r ∫ sin(qs) ds / q = r (cos qc - cos qb) / q²
        let outer = r * 0.5 * (b + c) * (b - c) * sinc(0.5 * q * (b + c)) * sinc(0.5 * q * (b - c));
        acc += sh.height * (inner + outer);
    }
    let rule = gauss_legendre(8, 0.0, 1.0).expect("fixed rule");
    for g in v.gaussians() {
        let cut = g.cutoff();
        let panel = (0.5 * g.range).min(1.5 / q.max(1e-12));
        // split at the kink of min(r, s)
        let mut sum = 0.0;
        for (lo, hi) in [(0.0, r.min(cut)), (r.min(cut), cut)] {
            if hi <= lo {
                continue;
            }
            let panels = (((hi - lo) / panel).ceil() as usize).clamp(1, 4000);
            let h = (hi - lo) / panels as f64;
            for k in 0..panels {
                let a = lo + k as f64 * h;
                for (&t, &wt) in rule.nodes().iter().zip(rule.weights()) {
                    let s = a + h * t;
                    sum += h * wt * g.value(s) * sinc(q * s) * s * s.min(r);
                }
            }
        }
        acc += sum;
    }
    acc
}

/// Largest eigenvalue of the Nyström matrix and its eigenfunction.
pub fn bs_top_eigenvalue(v: &RadialPotential, grid: &Grid) -> Result<BsSpectrum> {
    let m = bs_kernel(v, grid)?;
    let top = symmetric_eigen_top(&m, 1, &EigenConfig::default())?;
    let mut x: Vec<f64> = top.eigenvectors.column(0).iter().copied().collect();
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|c| *c = -*c);
    }
    let phi0 = x
        .iter()
        .zip(grid.weights())
        .map(|(c, w)| c / w.sqrt())
        .collect();
    Ok(BsSpectrum {
        grid: grid.clone(),
        mu: top.eigenvalues[0],
        phi0,
        kernel_dim: m.nrows(),
        potential: v.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::semi_infinite_grid;

    fn brute_sin_product(p: f64, q: f64, r: f64) -> f64 {
        let g = gauss_legendre(400, 0.0, r).unwrap();
        g.integrate(|s| (p * s).sin() * (q * s).sin()) / (p * q)
    }

    #[test]
    fn sin_product_matches_quadrature() {
        for &(p, q) in &[
            (1e-6, 2e-6),
            (1e-3, 5.0),
            (0.3, 0.3),
            (2.0, 7.5),
            (0.2, 0.21),
            (4.0, 4.0),
            (1e-5, 1e-5),
        ] {
            for &r in &[0.5, 1.0, 3.0] {
                let a = sin_product_over_pq(p, q, r);
                let b = brute_sin_product(p, q, r);
                assert!(
                    (a - b).abs() <= 1e-12 * b.abs().max(1e-3),
                    "p={p} q={q} r={r}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn diagonal_entry_closed_form() {
        let v = 1.7;
        let a = 1.3;
        let well = RadialPotential::square_well(-v, a).unwrap();
        let grid = semi_infinite_grid(24, 1.0).unwrap();
        let m = bs_kernel(&well, &grid).unwrap();
        for (i, (&p, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
            let expected =
                (2.0 * v / PI) / (p * p) * (a / 2.0 - (2.0 * p * a).sin() / (4.0 * p)) * w;
            assert!(
                (m[(i, i)] - expected).abs() <= 1e-10 * expected.abs(),
                "{i}"
            );
        }
    }

    #[test]
    fn gaussian_kernel_matches_quadrature() {
        let v = RadialPotential::gaussian_well(-1.3, 0.8).unwrap();
        for &(p, q) in &[(0.01_f64, 0.02_f64), (0.5, 1.5), (3.0, 3.0), (9.0, 0.1)] {
            let g = gauss_legendre(600, 0.0, 8.0).unwrap();
            let brute =
                -(2.0 / PI) * g.integrate(|s| (p * s).sin() * v.value(s) * (q * s).sin()) / (p * q);
            let k = kernel_entry(&v, p, q);
            assert!(
                (k - brute).abs() < 1e-10 * brute.abs().max(1e-6),
                "{p} {q}: {k} {brute}"
            );
        }
    }

    #[test]
    fn zero_potential_zero_matrix() {
        let v = RadialPotential::square_well(0.0, 1.0).unwrap();
        let grid = semi_infinite_grid(16, 1.0).unwrap();
        let m = bs_kernel(&v, &grid).unwrap();
        assert!(m.iter().all(|&x| x == 0.0));
        assert_eq!(bs_top_eigenvalue(&v, &grid).unwrap().mu, 0.0);
    }

    #[test]
    fn exact_symmetry() {
        let v = RadialPotential::square_well(-2.0, 1.0).unwrap();
        let grid = semi_infinite_grid(40, 1.0).unwrap();
        let m = bs_kernel(&v, &grid).unwrap();
        assert_eq!((&m - m.transpose()).amax(), 0.0);
    }

    #[test]
    fn rejects_finite_grid_and_empty_potential() {
        let v = RadialPotential::square_well(-2.0, 1.0).unwrap();
        assert!(bs_kernel(&v, &gauss_legendre(10, 0.0, 5.0).unwrap()).is_err());
        let empty = RadialPotential::new(vec![], vec![], 1.0).unwrap();
        assert!(bs_kernel(&empty, &semi_infinite_grid(10, 1.0).unwrap()).is_err());
    }

    #[test]
    fn critical_square_well_near_one() {
        let v = RadialPotential::square_well(-(PI / 2.0).powi(2), 1.0).unwrap();
        let grid = semi_infinite_grid(200, 1.0).unwrap();
        let s = bs_top_eigenvalue(&v, &grid).unwrap();
        assert!((s.mu - 1.0).abs() < 2e-5, "{}", s.mu);
        assert!(s.phi0[0] > 0.0);
        for &r in &[0.2, 0.9, 3.0, 20.0] {
            assert!(s.psi0_at(r) > 0.0);
        }
        assert!((s.rayleigh_quotient().unwrap() - s.mu).abs() < 1e-10);
        let norm: f64 = s
            .phi0
            .iter()
            .zip(s.grid.weights())
            .map(|(f, w)| w * f * f)
            .sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_in_potential() {
        let v = RadialPotential::square_well(-1.0, 1.0).unwrap();
        let grid = semi_infinite_grid(60, 1.0).unwrap();
        let a = bs_top_eigenvalue(&v, &grid).unwrap().mu;
        let b = bs_top_eigenvalue(&v.scaled(2.5), &grid).unwrap().mu;
        assert!((b - 2.5 * a).abs() < 1e-12);
    }
}
