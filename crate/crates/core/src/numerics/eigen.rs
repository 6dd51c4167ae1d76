use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::Real;
use crate::error::{Error, Result};

/// Tolerances for the dense symmetric eigensolvers.
#[derive(Debug, Clone, Copy)]
pub struct EigenConfig<T> {
    /// Accepted asymmetry, relative to the max-abs entry of the input.
    pub symmetry_tol: T,
    /// Accepted residual `|Mv - θv|`, relative to the max-abs entry.
    pub residual_tol: T,
}

impl<T: Real> Default for EigenConfig<T> {
    fn default() -> Self {
        let eps = T::default_epsilon();
        Self {
            symmetry_tol: T::lit(1e-12).max(eps * T::lit(64.0)),
            residual_tol: T::lit(1e-10).max(eps * T::lit(4096.0)),
        }
    }
}

/// Leading eigenpairs of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenResult<T: Real> {
    /// Sorted descending.
    pub eigenvalues: Vec<T>,
    /// Column `j` belongs to `eigenvalues[j]`.
    pub eigenvectors: DMatrix<T>,
    pub residual_norms: Vec<T>,
}

fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// `k` largest eigenvalues of a symmetric matrix with orthonormal eigenvectors.
pub fn symmetric_eigen_top<T: Real>(
    m: &DMatrix<T>,
    k: usize,
    config: &EigenConfig<T>,
) -> Result<EigenResult<T>> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "eigen input is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "requested {k} eigenpairs of a {n}x{n} matrix"
        )));
    }
    let scale = max_abs(m);
    let asym = (m - m.transpose())
        .iter()
        .fold(T::zero(), |acc, &x| acc.max(x.abs()));
    if asym > config.symmetry_tol * scale {
        return Err(Error::invalid(format!(
            "matrix not symmetric: asymmetry {:e} exceeds tolerance",
            asym.to_f64()
        )));
    }
    let sym = (m + m.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order.truncate(k);

    let mut vectors = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (j, &idx) in order.iter().enumerate() {
        let theta = eig.eigenvalues[idx];
        let v = eig.eigenvectors.column(idx).into_owned();
        let r = (&sym * &v - &v * theta).norm();
        if r > config.residual_tol * scale.max(T::default_epsilon()) {
            return Err(Error::Numerical(format!(
                "eigenpair residual {:e} above tolerance",
                r.to_f64()
            )));
        }
        vectors.set_column(j, &v);
        values.push(theta);
        residuals.push(r);
    }
    Ok(EigenResult {
        eigenvalues: values,
        eigenvectors: vectors,
        residual_norms: residuals,
    })
}

/// Lowest root of `H c = E S c` on the subspace kept by pivot dropping.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen<T: Real> {
    pub energy: T,
    /// Full-length coefficients; dropped directions carry zero. `cᵀ S c = 1`.
    pub coefficients: DVector<T>,
    /// Indices of basis functions removed by the pivot threshold.
    pub dropped: Vec<usize>,
    /// Second-lowest minus lowest root, when the retained space has two dimensions.
    pub gap: Option<T>,
}

/// Solves `H c = E S c` for the lowest `E`.
///
/// `S` is factored by an unpivoted Cholesky sweep; a basis direction whose
/// pivot falls below `reg_threshold * S_kk` is removed from the problem.
/// A pivot below `-sqrt(reg_threshold) * S_kk` means `S` is indefinite
/// beyond what regularization can absorb.
pub fn generalized_lowest_eigen<T: Real>(
    h: &DMatrix<T>,
    s: &DMatrix<T>,
    reg_threshold: T,
) -> Result<GeneralizedEigen<T>> {
    if !h.is_square() || !s.is_square() || h.nrows() != s.nrows() {
        return Err(Error::invalid(format!(
            "dimension mismatch: H is {}x{}, S is {}x{}",
            h.nrows(),
            h.ncols(),
            s.nrows(),
            s.ncols()
        )));
    }
    if !(reg_threshold > T::zero()) {
        return Err(Error::invalid("regularization threshold must be positive"));
    }
    let n = h.nrows();
    if n == 0 {
        return Err(Error::invalid("empty generalized eigenproblem"));
    }

    // Row-oriented Cholesky over the retained index set.
    let mut kept: Vec<usize> = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    let mut l: Vec<Vec<T>> = Vec::with_capacity(n);
    let hard_floor = -reg_threshold.sqrt();
    for k in 0..n {
        let skk = s[(k, k)];
        if !(skk > T::zero()) {
            return Err(Error::Numerical(format!(
                "overlap diagonal {k} is not positive"
            )));
        }
        let mut row = Vec::with_capacity(kept.len() + 1);
        for (a, &j) in kept.iter().enumerate() {
            let mut acc = s[(k, j)];
            for b in 0..a {
                acc -= row[b] * l[a][b];
            }
            row.push(acc / l[a][a]);
        }
        let pivot = skk - row.iter().fold(T::zero(), |acc, &x| acc + x * x);
        let rel = pivot / skk;
        if rel < hard_floor {
            return Err(Error::Numerical(format!(
                "overlap matrix indefinite at direction {k} (relative pivot {:e})",
                rel.to_f64()
            )));
        }
        if rel <= reg_threshold {
            dropped.push(k);
            continue;
        }
        row.push(pivot.sqrt());
        l.push(row);
        kept.push(k);
    }

    let m = kept.len();
    let mut lm = DMatrix::zeros(m, m);
    for (a, row) in l.iter().enumerate() {
        for (b, &x) in row.iter().enumerate() {
            lm[(a, b)] = x;
        }
    }
    let hr = DMatrix::from_fn(m, m, |a, b| h[(kept[a], kept[b])]);
    // M = L^{-1} H L^{-T}
    let x = lm
        .solve_lower_triangular(&hr)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let mt = lm
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let sym = (&mt + mt.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let lo = order[0];
    let energy = eig.eigenvalues[lo];
    let gap = order.get(1).map(|&i| eig.eigenvalues[i] - energy);
    let y = eig.eigenvectors.column(lo).into_owned();
    let cr = lm
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Numerical("back substitution failed".into()))?;
    let mut coefficients = DVector::zeros(n);
    for (a, &k) in kept.iter().enumerate() {
        coefficients[k] = cr[a];
    }
    Ok(GeneralizedEigen {
        energy,
        coefficients,
        dropped,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_top() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0_f64, 0.0, 0.0, 1.0]);
        let r = symmetric_eigen_top(&m, 1, &EigenConfig::default()).unwrap();
        assert_abs_diff_eq!(r.eigenvalues[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.eigenvectors[(0, 0)].abs(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.eigenvectors[(1, 0)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn swap_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let r = symmetric_eigen_top(&m, 2, &EigenConfig::default()).unwrap();
        assert_abs_diff_eq!(r.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.eigenvalues[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn shape_errors() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(symmetric_eigen_top(&m, 1, &EigenConfig::default()).is_err());
        let m = DMatrix::<f64>::identity(2, 2);
        assert!(symmetric_eigen_top(&m, 3, &EigenConfig::default()).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(symmetric_eigen_top(&m, 1, &EigenConfig::default()).is_err());
    }

    #[test]
    fn identity_metric() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0_f64, 0.0, 0.0, 5.0]);
        let s = DMatrix::identity(2, 2);
        let r = generalized_lowest_eigen(&h, &s, 1e-12).unwrap();
        assert_abs_diff_eq!(r.energy, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.coefficients[0].abs(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.coefficients[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.gap.unwrap(), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn scaled_metric() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let r = generalized_lowest_eigen(&h, &s, 1e-12).unwrap();
        assert_abs_diff_eq!(r.energy, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.coefficients[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn tiny_pivot_dropped() {
        let d = 1e-16;
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + d]);
        let h = DMatrix::from_row_slice(2, 2, &[1.0_f64, 0.5, 0.5, 3.0]);
        let r = generalized_lowest_eigen(&h, &s, 1e-12).unwrap();
        assert_eq!(r.dropped, vec![1]);
        assert!(r.energy.is_finite());
        assert_abs_diff_eq!(r.energy, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn indefinite_rejected() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let h = DMatrix::identity(2, 2);
        assert!(generalized_lowest_eigen(&h, &s, 1e-12).is_err());
        let h3 = DMatrix::<f64>::identity(3, 3);
        assert!(generalized_lowest_eigen(&h3, &DMatrix::identity(2, 2), 1e-12).is_err());
    }
}
