//! Stochastic variational growth of a symmetrized Gaussian basis.

use nalgebra::{DMatrix, DVector, SMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{Engine, Prepared, SymmetrizedGaussianBasis};
use super::elements::GaussianPattern;
use super::jacobi::build_jacobi_frame;
use crate::error::{Error, Result};
use crate::numerics::{generalized_lowest_eigen, SeededStream};
use crate::two_body::RadialPotential;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmSettings {
    pub target_size: usize,
    pub pool: usize,
    pub seed: u64,
    /// Pair correlation lengths, in units of the potential's declared range.
    pub correlation_range: (f64, f64),
    /// Candidates whose part orthogonal to the current span has relative
    /// squared norm below this are rejected.
    pub rejection_threshold: f64,
}

impl SvmSettings {
    /// 30 functions for `N = 2`, 150 for `N = 3`, 400 for `N = 4`; pool 40.
    pub fn defaults_for(n: usize) -> Self {
        let target_size = match n {
            2 => 30,
            3 => 150,
            _ => 400,
        };
        Self {
            target_size,
            pool: 40,
            seed: 1,
            correlation_range: (0.1, 50.0),
            rejection_threshold: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub n: usize,
    pub energy: f64,
    /// Over the normalized symmetrized functions, `cᵀ S c = 1`.
    pub coefficients: Vec<f64>,
    pub basis_size: usize,
    pub energy_trace: Vec<f64>,
    /// `|E(K) - E(K/2)|`.
    pub uncertainty: f64,
    /// Second-lowest minus lowest Ritz value.
    pub gap: Option<f64>,
}

/// Grows the basis to `target_size`, one winner per pool of random candidates.
pub fn svm_grow(
    n: usize,
    v: &RadialPotential,
    settings: &SvmSettings,
) -> Result<(SymmetrizedGaussianBasis, EnergyResult)> {
    if settings.target_size == 0 || settings.pool == 0 {
        return Err(Error::invalid("target size and pool must be at least 1"));
    }
    let (lo, hi) = settings.correlation_range;
    if !(lo > 0.0 && lo <= hi) {
        return Err(Error::invalid(format!(
            "bad correlation range ({lo}, {hi})"
        )));
    }
    let frame = build_jacobi_frame(n)?;
    let (patterns, trace) = match n {
        2 => grow(&Engine::<1>::new(&frame), v, settings)?,
        3 => grow(&Engine::<2>::new(&frame), v, settings)?,
        _ => grow(&Engine::<3>::new(&frame), v, settings)?,
    };
    let basis = SymmetrizedGaussianBasis::new(n, patterns)?;
    let (h, s) = super::basis::symmetrize_and_assemble(&basis, v)?;
    let sol = generalized_lowest_eigen(&h, &s, 0.1 * settings.rejection_threshold)?;
    let k = trace.len();
    let uncertainty = if k >= 2 {
        (trace[k - 1] - trace[k / 2 - 1]).abs()
    } else {
        f64::INFINITY
    };
    let result = EnergyResult {
        n,
        energy: sol.energy,
        coefficients: sol.coefficients.iter().copied().collect(),
        basis_size: k,
        energy_trace: trace,
        uncertainty,
        gap: sol.gap,
    };
    Ok((basis, result))
}

/// [`svm_grow`] without the basis.
pub fn ground_state(n: usize, v: &RadialPotential, settings: &SvmSettings) -> Result<EnergyResult> {
    Ok(svm_grow(n, v, settings)?.1)
}

struct Candidate {
    energy: f64,
    s_row: Vec<f64>,
    h_row: Vec<f64>,
    h_self: f64,
}

/// Current Ritz system: `Cᵀ S C = I`, `Cᵀ H C = diag(E)`.
struct Ritz {
    c: DMatrix<f64>,
    e: Vec<f64>,
}

impl Ritz {
    /// Projections `v = Cᵀ s`, `g = Cᵀ h`, orthogonal remainder `d` and the
    /// arrowhead border `b` and corner `z`.
    fn border(
        &self,
        s_row: &[f64],
        h_row: &[f64],
        h_self: f64,
    ) -> (DVector<f64>, f64, DVector<f64>, f64) {
        let k = s_row.len();
        let s = DVector::from_column_slice(s_row);
        let h = DVector::from_column_slice(h_row);
        let (v, g) = if k == 0 {
            (DVector::zeros(0), DVector::zeros(0))
        } else {
            (self.c.tr_mul(&s), self.c.tr_mul(&h))
        };
        let d = 1.0 - v.norm_squared();
        let sd = d.max(0.0).sqrt();
        let b = DVector::from_fn(k, |i, _| (g[i] - self.e[i] * v[i]) / sd);
        let ev2: f64 = (0..k).map(|i| self.e[i] * v[i] * v[i]).sum();
        let z = (h_self - 2.0 * v.dot(&g) + ev2) / d;
        (v, d, b, z)
    }
}

/// Lowest root of `z - E - Σ b_i² / (e_i - E)` for sorted `e`.
fn secular_lowest(e: &[f64], b: &DVector<f64>, z: f64) -> f64 {
    if e.is_empty() {
        return z;
    }
    let f = |x: f64| z - x - (0..e.len()).map(|i| b[i] * b[i] / (e[i] - x)).sum::<f64>();
    let radius: f64 = b.iter().map(|x| x.abs()).sum();
    let mut lo = (z - radius).min(e[0] - radius) - 1e-12 * (1.0 + z.abs());
    let mut hi = e[0].min(z + radius);
    if hi > e[0] {
        hi = e[0];
    }
    // f decreases on (-∞, e_0); f(lo) >= 0
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn random_pattern<const D: usize>(
    engine: &Engine<D>,
    stream: &mut SeededStream,
    lo: f64,
    hi: f64,
) -> SMatrix<f64, D, D> {
    let mut a = SMatrix::<f64, D, D>::zeros();
    for w in &engine.pairs {
        let d = stream.log_uniform(lo, hi);
        a += (w * w.transpose()) / (d * d);
    }
    a
}

fn grow<const D: usize>(
    engine: &Engine<D>,
    v: &RadialPotential,
    settings: &SvmSettings,
) -> Result<(Vec<GaussianPattern>, Vec<f64>)> {
    let ops = std::slice::from_ref(v);
    let (lo, hi) = (
        settings.correlation_range.0 * v.r_v(),
        settings.correlation_range.1 * v.r_v(),
    );
    let mut stream = SeededStream::new(settings.seed);
    let mut kept: Vec<Prepared<D>> = Vec::with_capacity(settings.target_size);
    let mut ritz = Ritz {
        c: DMatrix::zeros(0, 0),
        e: Vec::new(),
    };
    let mut trace = Vec::with_capacity(settings.target_size);

    for step in 0..settings.target_size {
        let pool: Vec<SMatrix<f64, D, D>> = (0..settings.pool)
            .map(|_| random_pattern(engine, &mut stream, lo, hi))
            .collect();
        let evaluated: Vec<Option<Candidate>> = pool
            .par_iter()
            .map(|a| {
                let cand = engine.prepare(*a);
                let mut out = [0.0; 3];
                engine.normalized_entry(&cand, &cand, ops, &mut out);
                let h_self = out[1] + out[2];
                let mut s_row = Vec::with_capacity(kept.len());
                let mut h_row = Vec::with_capacity(kept.len());
                for b in &kept {
                    engine.normalized_entry(&cand, b, ops, &mut out);
                    s_row.push(out[0]);
                    h_row.push(out[1] + out[2]);
                }
                let (_, d, b, z) = ritz.border(&s_row, &h_row, h_self);
                if !(d > settings.rejection_threshold) || !z.is_finite() {
                    return None;
                }
                let energy = secular_lowest(&ritz.e, &b, z);
                energy.is_finite().then_some(Candidate {
                    energy,
                    s_row,
                    h_row,
                    h_self,
                })
            })
            .collect();
        // lowest energy, ties to the lowest pool index
        let winner = evaluated
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|c| (i, c)))
            .min_by(|x, y| x.1.energy.total_cmp(&y.1.energy).then(x.0.cmp(&y.0)))
            .map(|(i, _)| i)
            .ok_or(Error::NoAdmissibleCandidate { step })?;
        let cand = evaluated[winner].as_ref().unwrap();
        let (v_proj, d, b, z) = ritz.border(&cand.s_row, &cand.h_row, cand.h_self);
        let k = ritz.e.len();
        let mut arrow = DMatrix::zeros(k + 1, k + 1);
        for i in 0..k {
            arrow[(i, i)] = ritz.e[i];
            arrow[(i, k)] = b[i];
            arrow[(k, i)] = b[i];
        }
        arrow[(k, k)] = z;
        let eig = SymmetricEigen::new(arrow);
        let mut order: Vec<usize> = (0..=k).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        // new function in the old eigenbasis: (φ - Σ v_i ψ_i) / sqrt(d)
        let sd = d.sqrt();
        let mut ext = DMatrix::zeros(k + 1, k + 1);
        if k > 0 {
            ext.view_mut((0, 0), (k, k)).copy_from(&ritz.c);
            let col = -(&ritz.c * &v_proj) / sd;
            ext.view_mut((0, k), (k, 1)).copy_from(&col);
        }
        ext[(k, k)] = 1.0 / sd;
        let q = DMatrix::from_fn(k + 1, k + 1, |i, j| eig.eigenvectors[(i, order[j])]);
        ritz.c = ext * q;
        ritz.e = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        trace.push(ritz.e[0]);
        kept.push(engine.prepare(pool[winner]));
    }

    let patterns = kept
        .iter()
        .map(|p| GaussianPattern::new(DMatrix::from_fn(D, D, |i, j| p.a[(i, j)])))
        .collect::<Result<Vec<_>>>()?;
    Ok((patterns, trace))
}
