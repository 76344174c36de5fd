use super::SymmetricToeplitz;
use crate::error::{Error, Result};

/// Solves `T x = b` for symmetric Toeplitz `T` in `O(L²)` per right-hand side.
///
/// The Durbin recursion grows the forward predictor `a` (with `T a = [e, 0, …]`);
/// its reversal gives the backward vector used to extend the solution one
/// order at a time.
pub fn levinson_solve(op: &SymmetricToeplitz, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let r = op.column();
    let n = r.len();
    if let Some(bad) = rhs.iter().find(|b| b.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let tiny = f64::EPSILON * r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r[0].abs() <= tiny {
        return Err(Error::LevinsonBreakdown { order: 0 });
    }

    let mut xs: Vec<Vec<f64>> = rhs
        .iter()
        .map(|b| {
            let mut x = Vec::with_capacity(n);
            x.push(b[0] / r[0]);
            x
        })
        .collect();
    let mut a = Vec::with_capacity(n);
    a.push(1.0);
    let mut err = r[0];

    for i in 1..n {
        let gamma: f64 = (0..i).map(|j| a[j] * r[i - j]).sum();
        let k = -gamma / err;
        a.push(0.0);
        let old = a.clone();
        for j in 0..=i {
            a[j] = old[j] + k * old[i - j];
        }
        err *= 1.0 - k * k;
        if err.abs() <= tiny || !err.is_finite() {
            return Err(Error::LevinsonBreakdown { order: i });
        }
        for (x, b) in xs.iter_mut().zip(rhs) {
            let eps = b[i] - (0..i).map(|j| r[i - j] * x[j]).sum::<f64>();
            let mu = eps / err;
            x.push(0.0);
            for j in 0..=i {
                x[j] += mu * a[i - j];
            }
        }
    }
    Ok(xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::direct_solve;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity() {
        let op = SymmetricToeplitz::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let x = levinson_solve(&op, std::slice::from_ref(&b)).unwrap();
        assert_eq!(x[0], b);
    }

    #[test]
    fn matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let s: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let col: Vec<f64> = (0..8)
                .map(|lag| s.iter().zip(&s[lag..]).map(|(a, b)| a * b).sum())
                .collect();
            let op = SymmetricToeplitz::new(col).unwrap();
            let b: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lev = levinson_solve(&op, std::slice::from_ref(&b)).unwrap();
            let dir = direct_solve(&op, &[b]).unwrap();
            let num: f64 = lev[0].iter().zip(&dir[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = dir[0].iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den < 1e-8);
        }
    }

    #[test]
    fn zero_leading_minor() {
        let op = SymmetricToeplitz::new(vec![0.0, 1.0, 0.5]).unwrap();
        assert!(matches!(
            levinson_solve(&op, &[vec![1.0, 1.0, 1.0]]),
            Err(Error::LevinsonBreakdown { order: 0 })
        ));
    }

    #[test]
    fn singular_minor_breaks_down() {
        let op = SymmetricToeplitz::new(vec![1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            levinson_solve(&op, &[vec![1.0, 1.0, 1.0]]),
            Err(Error::LevinsonBreakdown { order: 1 })
        ));
    }
}
