use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{base_loading, escalated_loading, max_loading, BlockToeplitz, SymmetricToeplitz};
use crate::error::{Error, Result};

/// Either structured operator, for the dense reference solver.
#[derive(Debug, Clone, Copy)]
pub enum ToeplitzRef<'a> {
    Symmetric(&'a SymmetricToeplitz),
    Block(&'a BlockToeplitz),
}

impl<'a> From<&'a SymmetricToeplitz> for ToeplitzRef<'a> {
    fn from(op: &'a SymmetricToeplitz) -> Self {
        ToeplitzRef::Symmetric(op)
    }
}

impl<'a> From<&'a BlockToeplitz> for ToeplitzRef<'a> {
    fn from(op: &'a BlockToeplitz) -> Self {
        ToeplitzRef::Block(op)
    }
}

/// Materializes the operator and solves with a Cholesky factorization,
/// diagonal loading escalating only if the factorization fails.
pub fn direct_solve<'a>(op: impl Into<ToeplitzRef<'a>>, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    match op.into() {
        ToeplitzRef::Symmetric(op) => {
            direct_solve_dense(&op.to_dense(), rhs, &[op.column()[0]], op.size())
        }
        ToeplitzRef::Block(op) => {
            direct_solve_dense(&op.to_dense(), rhs, &op.diagonal_lag0(), op.taps())
        }
    }
}

/// Dense solve of a symmetric system made of `lag0s.len()` diagonal blocks of
/// size `taps`; block `b` is loaded relative to its own lag-0 value.
pub fn direct_solve_dense(
    matrix: &DMatrix<f64>,
    rhs: &[Vec<f64>],
    lag0s: &[f64],
    taps: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = matrix.nrows();
    if let Some(bad) = rhs.iter().find(|b| b.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let chol = factor_loaded(matrix, lag0s, taps)?.0;
    Ok(rhs
        .iter()
        .map(|b| chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
        .collect())
}

/// Cholesky factor of `matrix + diag(loading)`, returning the per-row loading used.
pub(crate) fn factor_loaded(
    matrix: &DMatrix<f64>,
    lag0s: &[f64],
    taps: usize,
) -> Result<(Cholesky<f64, Dyn>, Vec<f64>)> {
    let n = matrix.nrows();
    if matrix.ncols() != n || lag0s.len() * taps != n {
        return Err(Error::DimensionMismatch {
            expected: lag0s.len() * taps,
            actual: n,
        });
    }
    let scale = lag0s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::SingularSystem);
    }
    let mut factor = 0.0;
    loop {
        let loading: Vec<f64> = (0..n)
            .map(|i| {
                let lag0 = lag0s[i / taps];
                base_loading(lag0, taps) + factor * escalated_loading(lag0, taps)
            })
            .collect();
        let mut m = matrix.clone();
        for (i, l) in loading.iter().enumerate() {
            m[(i, i)] += l;
        }
        if let Some(chol) = m.cholesky() {
            return Ok((chol, loading));
        }
        factor = if factor == 0.0 { 1.0 } else { factor * 100.0 };
        if factor * escalated_loading(scale, taps) > max_loading(scale) {
            return Err(Error::SingularSystem);
        }
    }
}
