//! Preconditioned conjugate gradient.
//!
//! ```text
//! r = b - A x;  z = M⁻¹ r;  p = z
//! repeat:
//!     α = (r·z) / (p·Ap)
//!     x += α p;  r -= α Ap
//!     z = M⁻¹ r;  β = (r·z)_new / (r·z)
//!     p = z + β p
//! ```

use rayon::prelude::*;

use super::{dot, norm, LinearOperator, Preconditioner};
use crate::config::Precision;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgdOptions {
    pub max_iters: usize,
    /// Stop once `‖Ax - b‖ / ‖b‖ <= rel_tol`. Zero runs all `max_iters`.
    pub rel_tol: f64,
    pub record_residuals: bool,
    /// Storage precision of the iteration vectors.
    pub precision: Precision,
}

impl Default for CgdOptions {
    /// The CGD10 configuration.
    fn default() -> Self {
        Self {
            max_iters: crate::config::DEFAULT_CGD_ITERS,
            rel_tol: 0.0,
            record_residuals: false,
            precision: Precision::Double,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgdOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Relative residual after the last iteration (recurrence value).
    pub final_residual: f64,
    /// Relative residual before the first and after every iteration, when recorded.
    pub residuals: Vec<f64>,
}

pub fn cgd_solve<A, P>(
    op: &A,
    precond: &P,
    rhs: &[f64],
    init: Option<&[f64]>,
    opts: &CgdOptions,
) -> Result<CgdOutcome>
where
    A: LinearOperator + ?Sized,
    P: Preconditioner + ?Sized,
{
    let n = op.dim();
    if opts.max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }
    for len in [rhs.len(), precond.dim()]
        .into_iter()
        .chain(init.map(<[f64]>::len))
    {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let store = opts.precision;
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(CgdOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            final_residual: 0.0,
            residuals: if opts.record_residuals { vec![0.0] } else { vec![] },
        });
    }

    let mut x = init.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    store.store_all(&mut x);
    let mut r = rhs.to_vec();
    let mut ap = vec![0.0; n];
    if init.is_some() {
        op.apply(&x, &mut ap);
        r.iter_mut().zip(&ap).for_each(|(ri, a)| *ri -= a);
    }
    store.store_all(&mut r);
    let mut z = vec![0.0; n];
    precond.precondition(&r, &mut z);
    store.store_all(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    let mut rel = norm(&r) / b_norm;
    let mut residuals = Vec::new();
    if opts.record_residuals {
        residuals.push(rel);
    }
    let mut iterations = 0;
    while iterations < opts.max_iters && rel > opts.rel_tol && rz != 0.0 {
        if rz < 0.0 {
            return Err(Error::BreakdownDetected {
                iteration: iterations,
                curvature: rz,
            });
        }
        op.apply(&p, &mut ap);
        store.store_all(&mut ap);
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 {
            return Err(Error::BreakdownDetected {
                iteration: iterations,
                curvature,
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] = store.store(x[i] + alpha * p[i]);
            r[i] = store.store(r[i] - alpha * ap[i]);
        }
        iterations += 1;
        rel = norm(&r) / b_norm;
        if opts.record_residuals {
            residuals.push(rel);
        }
        if rel <= opts.rel_tol || iterations == opts.max_iters {
            break;
        }
        precond.precondition(&r, &mut z);
        store.store_all(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = store.store(z[i] + beta * p[i]);
        }
    }

    Ok(CgdOutcome {
        solution: x,
        iterations,
        final_residual: rel,
        residuals,
    })
}

/// Independent CGD runs for several right-hand sides sharing one operator.
pub fn cgd_solve_many<A, P>(
    op: &A,
    precond: &P,
    rhs: &[Vec<f64>],
    init: Option<&[Vec<f64>]>,
    opts: &CgdOptions,
) -> Result<Vec<CgdOutcome>>
where
    A: LinearOperator + Sync + ?Sized,
    P: Preconditioner + Sync + ?Sized,
{
    if let Some(init) = init {
        if init.len() != rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: rhs.len(),
                actual: init.len(),
            });
        }
    }
    rhs.par_iter()
        .enumerate()
        .map(|(i, b)| cgd_solve(op, precond, b, init.map(|v| v[i].as_slice()), opts))
        .collect()
}
