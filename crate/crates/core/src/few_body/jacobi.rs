use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass-scaled Jacobi coordinates `x = U r` for `N` unit-mass particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiFrame {
    pub n: usize,
    /// `(N-1) x N`, orthonormal rows orthogonal to `(1, ..., 1)`.
    pub u: DMatrix<f64>,
    /// `((i, j), w_ij)` with `r_i - r_j = w_ijᵀ x`, pairs in lexicographic order.
    pub pair_forms: Vec<((usize, usize), DVector<f64>)>,
}

pub fn build_jacobi_frame(n: usize) -> Result<JacobiFrame> {
    if !(2..=4).contains(&n) {
        return Err(Error::invalid(format!(
            "particle count must be 2, 3 or 4, got {n}"
        )));
    }
    let mut u = DMatrix::zeros(n - 1, n);
    for k in 1..n {
        let scale = (k as f64 / (k as f64 + 1.0)).sqrt();
        for i in 0..k {
            u[(k - 1, i)] = scale / k as f64;
        }
        u[(k - 1, k)] = -scale;
    }
    let mut pair_forms = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pair_forms.push(((i, j), u.column(i) - u.column(j)));
        }
    }
    Ok(JacobiFrame { n, u, pair_forms })
}

impl JacobiFrame {
    pub fn dim(&self) -> usize {
        self.n - 1
    }

    pub fn pair_count(&self) -> usize {
        self.pair_forms.len()
    }

    /// `T = U P Uᵀ` for the relabeling `r'_i = r_{perm[i]}`, so `x' = T x`.
    pub fn permutation_matrix(&self, perm: &[usize]) -> Result<DMatrix<f64>> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n
            || perm
                .iter()
                .any(|&p| p >= self.n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::invalid(format!(
                "{perm:?} is not a permutation of {} labels",
                self.n
            )));
        }
        let p = DMatrix::from_fn(self.n, self.n, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
        Ok(&self.u * p * self.u.transpose())
    }

    /// Coordinate maps for all `N!` permutations, identity first.
    pub fn permutation_group(&self) -> Vec<DMatrix<f64>> {
        permutations(self.n)
            .iter()
            .map(|p| self.permutation_matrix(p).expect("generated permutation"))
            .collect()
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}
