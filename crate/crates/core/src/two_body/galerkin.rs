//! Radial spectral-element discretization of the same Birman-Schwinger
//! operator.
//!
//! The nonzero spectrum of `(-Δ)^{-1/2}(-V)(-Δ)^{-1/2}` in the s-wave equals
//! that of the pencil `∫(-V) u w dr = μ ∫ u' w' dr` on `[0, L]` with
//! `u(0) = 0` and a natural boundary at `L`, where `L` bounds the support of
//! `V` (outside it the energy-minimizing continuation is constant). Elements
//! are aligned with every shell edge, so the piecewise-analytic eigenfunction
//! is resolved with spectral accuracy.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::potential::RadialPotential;
use crate::error::{Error, Result};
use crate::numerics::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalerkinSettings {
    /// Polynomial degree per element.
    pub degree: usize,
    /// Element length cap near the origin, in the potential's length unit.
    pub max_element: f64,
    /// Element length may grow to `grading * r` away from the origin.
    pub grading: f64,
}

impl Default for GalerkinSettings {
    fn default() -> Self {
        Self {
            degree: 24,
            max_element: 0.5,
            grading: 0.5,
        }
    }
}

impl GalerkinSettings {
    pub fn refined(&self) -> Self {
        Self {
            degree: self.degree + 8,
            max_element: self.max_element / 2.0,
            grading: self.grading / 2.0,
        }
    }
}

/// Element layout plus reference-element tables.
#[derive(Debug, Clone)]
pub struct RadialMesh {
    pub elements: Vec<(f64, f64)>,
    pub degree: usize,
    /// Chebyshev-Lobatto nodes on `[-1, 1]`.
    ref_nodes: Vec<f64>,
    quad_x: Vec<f64>,
    quad_w: Vec<f64>,
    /// `[q][k]` values and derivatives of the Lagrange basis at quadrature points.
    basis: Vec<Vec<f64>>,
    dbasis: Vec<Vec<f64>>,
}

impl RadialMesh {
    /// Mesh covering `[0, max(breakpoints)]`, aligned with every breakpoint.
    pub fn new(breakpoints: &[f64], settings: &GalerkinSettings) -> Result<Self> {
        if settings.degree < 2 || !(settings.max_element > 0.0) || !(settings.grading > 0.0) {
            return Err(Error::invalid(format!(
                "bad Galerkin settings {settings:?}"
            )));
        }
        let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|x| *x >= 0.0).collect();
        pts.push(0.0);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1.0));
        if pts.len() < 2 {
            return Err(Error::invalid("mesh needs a positive outer radius"));
        }
        let mut elements = Vec::new();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let step = |x: f64| settings.max_element.max(settings.grading * x);
            let mut raw = vec![a];
            while *raw.last().unwrap() < b {
                let x = *raw.last().unwrap();
                raw.push(x + step(x));
            }
            // shrink uniformly so the last element ends exactly at b
            let scale = (b - a) / (raw.last().unwrap() - a);
            let m = raw.len() - 1;
            for i in 0..m {
                let lo = a + (raw[i] - a) * scale;
                let hi = if i + 1 == m {
                    b
                } else {
                    a + (raw[i + 1] - a) * scale
                };
                elements.push((lo, hi));
            }
        }

        let p = settings.degree;
        let ref_nodes: Vec<f64> = (0..=p)
            .map(|k| -(std::f64::consts::PI * k as f64 / p as f64).cos())
            .collect();
        let rule = gauss_legendre(2 * p + 2, -1.0, 1.0)?;
        let quad_x = rule.nodes().to_vec();
        let quad_w = rule.weights().to_vec();
        let mut basis = Vec::with_capacity(quad_x.len());
        let mut dbasis = Vec::with_capacity(quad_x.len());
        for &x in &quad_x {
            let (l, dl) = lagrange_row(&ref_nodes, x);
            basis.push(l);
            dbasis.push(dl);
        }
        Ok(Self {
            elements,
            degree: p,
            ref_nodes,
            quad_x,
            quad_w,
            basis,
            dbasis,
        })
    }

    /// Unknowns after removing the Dirichlet node at the origin.
    pub fn dofs(&self) -> usize {
        self.elements.len() * self.degree
    }

    pub fn outer_radius(&self) -> f64 {
        self.elements.last().map(|e| e.1).unwrap_or(0.0)
    }

    fn global_index(&self, element: usize, local: usize) -> Option<usize> {
        let g = element * self.degree + local;
        // global node 0 is the origin
        g.checked_sub(1)
    }

    /// `∫ u_i' u_j' dr`.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let n = self.dofs();
        let mut k = DMatrix::zeros(n, n);
        for (e, &(a, b)) in self.elements.iter().enumerate() {
            let jac = 0.5 * (b - a);
            for (q, &wq) in self.quad_w.iter().enumerate() {
                let d = &self.dbasis[q];
                for i in 0..=self.degree {
                    let Some(gi) = self.global_index(e, i) else {
                        continue;
                    };
                    for j in 0..=self.degree {
                        let Some(gj) = self.global_index(e, j) else {
                            continue;
                        };
                        k[(gi, gj)] += wq * d[i] * d[j] / jac;
                    }
                }
            }
        }
        k
    }

    /// `∫ (u_i' u_j' + l(l+1) u_i u_j / r²) dr` plus the exterior `r^{-l}` tail.
    pub fn partial_wave_stiffness(&self, l: u32) -> DMatrix<f64> {
        let mut k = self.stiffness();
        if l == 0 {
            return k;
        }
        let c = (l * (l + 1)) as f64;
        k += self.weighted_mass(|r| c / (r * r));
        let n = k.nrows();
        k[(n - 1, n - 1)] += l as f64 / self.outer_radius();
        k
    }

    /// `∫ f(r) u_i u_j dr`.
    pub fn weighted_mass<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let n = self.dofs();
        let mut m = DMatrix::zeros(n, n);
        for (e, &(a, b)) in self.elements.iter().enumerate() {
            let jac = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (q, (&xq, &wq)) in self.quad_x.iter().zip(&self.quad_w).enumerate() {
                let fv = f(mid + jac * xq);
                if fv == 0.0 {
                    continue;
                }
                let l = &self.basis[q];
                for i in 0..=self.degree {
                    let Some(gi) = self.global_index(e, i) else {
                        continue;
                    };
                    for j in 0..=self.degree {
                        let Some(gj) = self.global_index(e, j) else {
                            continue;
                        };
                        m[(gi, gj)] += wq * jac * fv * l[i] * l[j];
                    }
                }
            }
        }
        m
    }

    /// Value of the finite-element function with nodal values `coeffs` at `r`.
    pub fn evaluate(&self, coeffs: &DVector<f64>, r: f64) -> f64 {
        let outer = self.outer_radius();
        if r >= outer {
            return coeffs[coeffs.len() - 1];
        }
        let e = self
            .elements
            .partition_point(|&(_, b)| b < r)
            .min(self.elements.len() - 1);
        let (a, b) = self.elements[e];
        let x = (2.0 * r - a - b) / (b - a);
        let (l, _) = lagrange_row(&self.ref_nodes, x);
        (0..=self.degree)
            .map(|i| self.global_index(e, i).map_or(0.0, |g| coeffs[g]) * l[i])
            .sum()
    }
}

/// Lagrange basis values and derivatives at `x` (product form; safe at nodes).
fn lagrange_row(nodes: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.len();
    let mut val = vec![0.0; n];
    let mut der = vec![0.0; n];
    for k in 0..n {
        let mut denom = 1.0;
        for j in 0..n {
            if j != k {
                denom *= nodes[k] - nodes[j];
            }
        }
        let mut prod = 1.0;
        for j in 0..n {
            if j != k {
                prod *= x - nodes[j];
            }
        }
        val[k] = prod / denom;
        let mut d = 0.0;
        for m in 0..n {
            if m == k {
                continue;
            }
            let mut p = 1.0;
            for j in 0..n {
                if j != k && j != m {
                    p *= x - nodes[j];
                }
            }
            d += p;
        }
        der[k] = d / denom;
    }
    (val, der)
}

/// Pencil `(W, K)` reduced to a symmetric matrix by the Cholesky factor of `K`.
#[derive(Debug, Clone)]
pub struct GalerkinOperator {
    pub mesh: RadialMesh,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl GalerkinOperator {
    pub fn new(mesh: RadialMesh) -> Result<Self> {
        Self::partial_wave(mesh, 0)
    }

    /// Operator for angular momentum `l`.
    pub fn partial_wave(mesh: RadialMesh, l: u32) -> Result<Self> {
        let k = mesh.partial_wave_stiffness(l);
        let chol = Cholesky::new(k)
            .ok_or_else(|| Error::Numerical("stiffness matrix not positive definite".into()))?;
        Ok(Self { mesh, chol })
    }

    /// `L^{-1} W L^{-T}` for `W = ∫(-V) u w`.
    pub fn reduced(&self, v: &RadialPotential) -> DMatrix<f64> {
        let w = self.mesh.weighted_mass(|r| -v.value(r));
        self.reduce(&w)
    }

    pub fn reduce(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let l = self.chol.l();
        let x = l.solve_lower_triangular(w).expect("nonsingular factor");
        let y = l
            .solve_lower_triangular(&x.transpose())
            .expect("nonsingular factor");
        (&y + y.transpose()) * 0.5
    }

    /// Nodal values of `u` from a reduced-space eigenvector.
    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        self.chol
            .l()
            .transpose()
            .solve_upper_triangular(y)
            .expect("nonsingular factor")
    }
}

/// Top eigenpair of the radial pencil.
#[derive(Debug, Clone)]
pub struct GalerkinSpectrum {
    pub mu: f64,
    /// Nodal values of `u = r psi0` with `∫ u'^2 dr = 1`.
    pub u: DVector<f64>,
    pub mesh: RadialMesh,
}

pub(crate) fn top_of_reduced(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let (idx, &mu) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("nonempty spectrum");
    (mu, eig.eigenvectors.column(idx).into_owned())
}

pub fn galerkin_top_eigenvalue(
    v: &RadialPotential,
    settings: &GalerkinSettings,
) -> Result<GalerkinSpectrum> {
    partial_wave_top_eigenvalue(v, 0, settings)
}

/// Top eigenpair in partial wave `l`; a bound state with that `l` exists iff `mu > 1`.
pub fn partial_wave_top_eigenvalue(
    v: &RadialPotential,
    l: u32,
    settings: &GalerkinSettings,
) -> Result<GalerkinSpectrum> {
    if v.is_empty() {
        return Err(Error::invalid("potential has no terms"));
    }
    let mesh = RadialMesh::new(&v.breakpoints(), settings)?;
    let op = GalerkinOperator::partial_wave(mesh, l)?;
    let (mu, y) = top_of_reduced(&op.reduced(v));
    let mut u = op.lift(&y);
    if u.sum() < 0.0 {
        u = -u;
    }
    Ok(GalerkinSpectrum {
        mu,
        u,
        mesh: op.mesh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn critical_square_well_is_one() {
        let v = RadialPotential::square_well(-(PI / 2.0).powi(2), 1.0).unwrap();
        let s = galerkin_top_eigenvalue(&v, &GalerkinSettings::default()).unwrap();
        assert!((s.mu - 1.0).abs() < 2e-12, "{}", s.mu - 1.0);
        // u = sin(πr/2) up to normalization
        let scale = s.mesh.evaluate(&s.u, 1.0);
        for &r in &[0.1, 0.4, 0.77] {
            let u = s.mesh.evaluate(&s.u, r) / scale;
            assert!((u - (PI * r / 2.0).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn mesh_aligned_with_breakpoints() {
        let mesh = RadialMesh::new(&[0.0, 1.0, 10.0, 20.0], &GalerkinSettings::default()).unwrap();
        for bp in [1.0, 10.0, 20.0] {
            assert!(mesh.elements.iter().any(|e| e.1 == bp));
        }
        assert!(mesh.elements.windows(2).all(|w| w[0].1 == w[1].0));
        assert_eq!(mesh.outer_radius(), 20.0);
    }

    #[test]
    fn refinement_is_converged() {
        let v = RadialPotential::gaussian_well(-2.7, 1.0).unwrap();
        let s = GalerkinSettings::default();
        let a = galerkin_top_eigenvalue(&v, &s).unwrap().mu;
        let b = galerkin_top_eigenvalue(&v, &s.refined()).unwrap().mu;
        assert!((a - b).abs() < 2e-11, "{a} {b}");
    }

    #[test]
    fn square_well_partial_waves() {
        // zero-energy threshold for l is the first zero of j_{l-1}(sqrt(g))
        let g = 3.0;
        let v = RadialPotential::square_well(-g, 1.0).unwrap();
        let s = GalerkinSettings::default();
        let p = partial_wave_top_eigenvalue(&v, 1, &s).unwrap().mu;
        assert!((p - g / (PI * PI)).abs() < 1e-11, "{p}");
        let d = partial_wave_top_eigenvalue(&v, 2, &s).unwrap().mu;
        let x = 4.493_409_457_909_064_f64;
        assert!((d - g / (x * x)).abs() < 1e-11, "{d}");
        let z = partial_wave_top_eigenvalue(&v, 0, &s).unwrap().mu;
        assert!(z > p && p > d);
    }
}
