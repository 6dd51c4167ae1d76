//! Permutation-symmetrized Gaussian basis and matrix assembly.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SMatrix, SVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::elements::{pair_distance_average, GaussianPattern};
use super::jacobi::{build_jacobi_frame, JacobiFrame};
use crate::error::{Error, Result};
use crate::two_body::RadialPotential;

/// Basis functions `φ_k(x) = Σ_P exp(-½ xᵀ Pᵀ A_k P x)` over the `N!`
/// coordinate maps of particle relabelings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizedGaussianBasis {
    pub n: usize,
    pub patterns: Vec<GaussianPattern>,
    #[serde(skip)]
    frame: Option<JacobiFrame>,
}

impl SymmetrizedGaussianBasis {
    pub fn new(n: usize, patterns: Vec<GaussianPattern>) -> Result<Self> {
        let frame = build_jacobi_frame(n)?;
        if patterns.iter().any(|p| p.dim() != n - 1) {
            return Err(Error::invalid(format!(
                "every pattern must be {0}x{0}",
                n - 1
            )));
        }
        Ok(Self {
            n,
            patterns,
            frame: Some(frame),
        })
    }

    pub fn frame(&self) -> JacobiFrame {
        self.frame
            .clone()
            .unwrap_or_else(|| build_jacobi_frame(self.n).expect("validated particle count"))
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Group representation acting on patterns as `A ↦ Pᵀ A P`.
    pub fn group(&self) -> Vec<DMatrix<f64>> {
        self.frame().permutation_group()
    }

    /// Same basis with every pattern relabeled by one particle permutation.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let t = self.frame().permutation_matrix(perm)?;
        Self::new(
            self.n,
            self.patterns.iter().map(|p| p.transformed(&t)).collect(),
        )
    }
}

/// Matrices over the normalized symmetrized functions `φ_k / sqrt(⟨φ_k|φ_k⟩)`.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    pub overlap: DMatrix<f64>,
    pub kinetic: DMatrix<f64>,
    /// `Σ_{i<j} O(|r_i - r_j|)` for each requested radial operator.
    pub pair_sums: Vec<DMatrix<f64>>,
}

/// `(H, S)` with `H = T + Σ_pairs V`.
pub fn symmetrize_and_assemble(
    basis: &SymmetrizedGaussianBasis,
    v: &RadialPotential,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let ops = assemble_operators(basis, std::slice::from_ref(v))?;
    let h = &ops.kinetic + &ops.pair_sums[0];
    Ok((h, ops.overlap))
}

pub fn assemble_operators(
    basis: &SymmetrizedGaussianBasis,
    ops: &[RadialPotential],
) -> Result<AssembledOperators> {
    if basis.is_empty() {
        return Err(Error::invalid("basis is empty"));
    }
    let frame = basis.frame();
    Ok(match basis.n {
        2 => Engine::<1>::new(&frame).assemble(&basis.patterns, ops),
        3 => Engine::<2>::new(&frame).assemble(&basis.patterns, ops),
        4 => Engine::<3>::new(&frame).assemble(&basis.patterns, ops),
        n => return Err(Error::invalid(format!("unsupported particle count {n}"))),
    })
}

/// Fixed-size evaluation of symmetrized elements in `D = N - 1` dimensions.
pub(crate) struct Engine<const D: usize> {
    pub(crate) perms: Vec<SMatrix<f64, D, D>>,
    pub(crate) pairs: Vec<SVector<f64, D>>,
}

/// A pattern with its images under every relabeling and its symmetrized norm.
#[derive(Clone)]
pub(crate) struct Prepared<const D: usize> {
    pub(crate) a: SMatrix<f64, D, D>,
    pub(crate) images: Vec<SMatrix<f64, D, D>>,
    pub(crate) norm: f64,
}

impl<const D: usize> Engine<D> {
    pub(crate) fn new(frame: &JacobiFrame) -> Self {
        assert_eq!(frame.dim(), D);
        let perms = frame
            .permutation_group()
            .iter()
            .map(|t| SMatrix::<f64, D, D>::from_fn(|i, j| t[(i, j)]))
            .collect();
        let pairs = frame
            .pair_forms
            .iter()
            .map(|(_, w)| SVector::<f64, D>::from_fn(|i, _| w[i]))
            .collect();
        Self { perms, pairs }
    }

    pub(crate) fn prepare(&self, a: SMatrix<f64, D, D>) -> Prepared<D> {
        let images: Vec<_> = self
            .perms
            .iter()
            .map(|t| {
                let m = t.transpose() * a * t;
                (m + m.transpose()) * 0.5
            })
            .collect();
        let mut p = Prepared {
            a,
            images,
            norm: 1.0,
        };
        let mut out = [0.0; 2];
        self.raw_entry(&p, &p, &[], &mut out);
        p.norm = out[0];
        p
    }

    /// Unnormalized `[S, T, O_0, O_1, ...]` between `φ_a` and `φ_b`
    /// (the common `N!` factor dropped).
    pub(crate) fn raw_entry(
        &self,
        a: &Prepared<D>,
        b: &Prepared<D>,
        ops: &[RadialPotential],
        out: &mut [f64],
    ) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let pref = (2.0 * PI).powf(1.5 * D as f64);
        for bp in &b.images {
            let m = a.a + bp;
            let (inv, det) = spd_inverse(&m);
            let ov = pref * det.powf(-1.5);
            out[0] += ov;
            if out.len() > 1 {
                out[1] += 1.5 * (a.a * inv * bp).trace() * ov;
            }
            if !ops.is_empty() {
                for w in &self.pairs {
                    let c = w.dot(&(inv * w));
                    for (k, op) in ops.iter().enumerate() {
                        out[2 + k] += ov * pair_distance_average(op, c);
                    }
                }
            }
        }
    }

    pub(crate) fn normalized_entry(
        &self,
        a: &Prepared<D>,
        b: &Prepared<D>,
        ops: &[RadialPotential],
        out: &mut [f64],
    ) {
        self.raw_entry(a, b, ops, out);
        let scale = 1.0 / (a.norm * b.norm).sqrt();
        out.iter_mut().for_each(|x| *x *= scale);
    }

    pub(crate) fn to_static(a: &DMatrix<f64>) -> SMatrix<f64, D, D> {
        SMatrix::<f64, D, D>::from_fn(|i, j| a[(i, j)])
    }

    pub(crate) fn assemble(
        &self,
        patterns: &[GaussianPattern],
        ops: &[RadialPotential],
    ) -> AssembledOperators {
        let prepared: Vec<Prepared<D>> = patterns
            .par_iter()
            .map(|p| self.prepare(Self::to_static(&p.a)))
            .collect();
        let k = prepared.len();
        let width = 2 + ops.len();
        // upper triangle, row-major, each entry written once
        let index: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
        let values: Vec<Vec<f64>> = index
            .par_iter()
            .map(|&(i, j)| {
                let mut out = vec![0.0; width];
                self.normalized_entry(&prepared[i], &prepared[j], ops, &mut out);
                out
            })
            .collect();
        let mut mats: Vec<DMatrix<f64>> = (0..width).map(|_| DMatrix::zeros(k, k)).collect();
        for (&(i, j), vals) in index.iter().zip(&values) {
            for (m, &x) in mats.iter_mut().zip(vals) {
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        let mut it = mats.into_iter();
        let overlap = it.next().unwrap();
        let kinetic = it.next().unwrap();
        AssembledOperators {
            overlap,
            kinetic,
            pair_sums: it.collect(),
        }
    }
}

/// Inverse and determinant of a small symmetric positive-definite matrix by Cholesky.
fn spd_inverse<const D: usize>(m: &SMatrix<f64, D, D>) -> (SMatrix<f64, D, D>, f64) {
    let mut l = SMatrix::<f64, D, D>::zeros();
    for j in 0..D {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        assert!(
            d > 0.0,
            "sum of positive definite patterns must be positive definite"
        );
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..D {
            let mut x = m[(i, j)];
            for k in 0..j {
                x -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = x / ljj;
        }
    }
    // L^{-1} by forward substitution
    let mut li = SMatrix::<f64, D, D>::zeros();
    for c in 0..D {
        for i in c..D {
            let mut x = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                x -= l[(i, k)] * li[(k, c)];
            }
            li[(i, c)] = x / l[(i, i)];
        }
    }
    let det = (0..D).map(|i| l[(i, i)] * l[(i, i)]).product();
    (li.transpose() * li, det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::few_body::elements::{kinetic_element, overlap_element, pair_potential_element};

    fn pattern(n: usize, seed: u64) -> GaussianPattern {
        let mut s = crate::numerics::SeededStream::new(seed);
        let m = DMatrix::from_fn(n, n, |_, _| s.next_f64() - 0.5);
        GaussianPattern::new(&m * m.transpose() + DMatrix::identity(n, n) * 0.3).unwrap()
    }

    #[test]
    fn small_inverse() {
        let m = SMatrix::<f64, 3, 3>::new(4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0);
        let (inv, det) = spd_inverse(&m);
        assert!((inv * m - SMatrix::<f64, 3, 3>::identity()).amax() < 1e-14);
        assert!((det - m.determinant()).abs() < 1e-12);
    }

    #[test]
    fn two_body_symmetrization_doubles() {
        let p = pattern(1, 1);
        let basis = SymmetrizedGaussianBasis::new(2, vec![p.clone()]).unwrap();
        let v = RadialPotential::gaussian_well(-1.0, 1.0).unwrap();
        let frame = basis.frame();
        let raw_s = overlap_element(&p, &p).unwrap();
        let raw_h = kinetic_element(&p, &p).unwrap()
            + pair_potential_element(&p, &p, (0, 1), &v, &frame).unwrap();
        let engine = Engine::<1>::new(&frame);
        let prep = engine.prepare(Engine::<1>::to_static(&p.a));
        assert!((prep.norm - 2.0 * raw_s).abs() < 1e-12 * raw_s);
        let (h, s) = symmetrize_and_assemble(&basis, &v).unwrap();
        assert!((s[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((h[(0, 0)] / s[(0, 0)] - raw_h / raw_s).abs() < 1e-12);
    }

    #[test]
    fn matrices_symmetric_and_relabel_invariant() {
        let basis =
            SymmetrizedGaussianBasis::new(3, (0..5).map(|k| pattern(2, k)).collect()).unwrap();
        let v = RadialPotential::square_well(-2.0, 1.0).unwrap();
        let (h, s) = symmetrize_and_assemble(&basis, &v).unwrap();
        assert!((&h - h.transpose()).amax() < 1e-12);
        let swapped = basis.relabeled(&[1, 0, 2]).unwrap();
        let (h2, s2) = symmetrize_and_assemble(&swapped, &v).unwrap();
        assert!((&h - h2).amax() < 1e-12 && (&s - s2).amax() < 1e-12);
    }
}
