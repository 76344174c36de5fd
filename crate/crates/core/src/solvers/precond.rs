use realfft::num_complex::Complex;

use super::toeplitz::RealSpectral;
use super::{BlockToeplitz, SymmetricToeplitz};
use crate::error::{Error, Result};

/// Approximate inverse applied to CGD residuals.
pub trait Preconditioner {
    fn dim(&self) -> usize;
    /// `z = M⁻¹ r`.
    fn precondition(&self, r: &[f64], z: &mut [f64]);
}

/// No preconditioning.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl Preconditioner for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// First column of the Frobenius-nearest circulant to a Toeplitz block with
/// entries `t[i - j]`, given as lags `-(L-1)..=L-1`:
/// `c[ℓ] = ((L - ℓ)·t[ℓ] + ℓ·t[ℓ - L]) / L`.
pub(crate) fn optimal_circulant_column(lags: &[f64], taps: usize) -> Vec<f64> {
    let n = taps as f64;
    let center = taps - 1;
    (0..taps)
        .map(|l| {
            let fwd = lags[center + l];
            if l == 0 {
                fwd
            } else {
                let wrapped = lags[l - 1];
                ((taps - l) as f64 * fwd + l as f64 * wrapped) / n
            }
        })
        .collect()
}

/// The optimal circulant approximation of a symmetric Toeplitz matrix,
/// stored through its eigenvalues.
#[derive(Debug, Clone)]
pub struct CirculantPreconditioner {
    column: Vec<f64>,
    spectral: RealSpectral,
    /// Eigenvalues for bins `0..=L/2`; the rest follow by symmetry.
    half: Vec<f64>,
}

impl CirculantPreconditioner {
    pub fn new(op: &SymmetricToeplitz) -> Result<Self> {
        let r = op.column();
        let taps = r.len();
        let lags: Vec<f64> = r[1..].iter().rev().chain(r.iter()).copied().collect();
        Self::from_column(optimal_circulant_column(&lags, taps))
    }

    /// Builds the preconditioner directly from a circulant first column.
    pub fn from_column(column: Vec<f64>) -> Result<Self> {
        if column.is_empty() {
            return Err(Error::EmptyInput);
        }
        let spectral = RealSpectral::new(column.len());
        let half: Vec<f64> = spectral.forward(&column).iter().map(|c| c.re).collect();
        let max = half.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(bin) = half.iter().position(|&v| v <= f64::EPSILON * max || v <= 0.0) {
            return Err(Error::NonPositivePreconditioner { bin });
        }
        Ok(Self {
            column,
            spectral,
            half,
        })
    }

    pub fn first_column(&self) -> &[f64] {
        &self.column
    }

    /// All `L` eigenvalues, in FFT bin order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.column.len();
        (0..n)
            .map(|f| self.half[if f <= n / 2 { f } else { n - f }])
            .collect()
    }

    /// `C v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.scale_spectrum(v, |spec, lam| spec * lam)
    }

    /// `C⁻¹ v`.
    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        self.scale_spectrum(v, |spec, lam| spec / lam)
    }

    fn scale_spectrum(&self, v: &[f64], op: impl Fn(Complex<f64>, f64) -> Complex<f64>) -> Vec<f64> {
        let mut spec = self.spectral.forward(v);
        spec.iter_mut()
            .zip(&self.half)
            .for_each(|(s, &lam)| *s = op(*s, lam));
        let scale = 1.0 / self.spectral.len() as f64;
        let mut out = self.spectral.inverse(spec);
        out.iter_mut().for_each(|x| *x *= scale);
        out
    }
}

impl Preconditioner for CirculantPreconditioner {
    fn dim(&self) -> usize {
        self.column.len()
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&self.apply_inverse(r));
    }
}

/// Block-circulant approximation of a block-Toeplitz matrix. After the FFT
/// it is block diagonal with one Hermitian `K × K` matrix per frequency bin;
/// each is Cholesky-factored once.
#[derive(Debug, Clone)]
pub struct BlockCirculantPreconditioner {
    blocks: usize,
    taps: usize,
    spectral: RealSpectral,
    /// Per bin `0..=L/2`, the `K × K` bin matrix (row-major).
    bins: Vec<Vec<Complex<f64>>>,
    /// Per bin, the lower Cholesky factor (row-major).
    factors: Vec<Vec<Complex<f64>>>,
}

impl BlockCirculantPreconditioner {
    pub fn new(op: &BlockToeplitz) -> Result<Self> {
        let (k, taps) = (op.blocks(), op.taps());
        let spectral = RealSpectral::new(taps);
        let spectra: Vec<Vec<Complex<f64>>> = (0..k * k)
            .map(|i| {
                let col = optimal_circulant_column(op.block(i / k, i % k), taps);
                spectral.forward(&col)
            })
            .collect();
        let nbins = spectra[0].len();
        let mut bins = Vec::with_capacity(nbins);
        let mut factors = Vec::with_capacity(nbins);
        for f in 0..nbins {
            let m: Vec<Complex<f64>> = (0..k * k).map(|i| spectra[i][f]).collect();
            let g = cholesky(&m, k).ok_or(Error::NonPositivePreconditioner { bin: f })?;
            bins.push(m);
            factors.push(g);
        }
        Ok(Self {
            blocks: k,
            taps,
            spectral,
            bins,
            factors,
        })
    }

    /// The `K × K` matrix of frequency bin `f` (row-major), for `f <= L/2`.
    pub fn bin_matrix(&self, f: usize) -> &[Complex<f64>] {
        &self.bins[f]
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    /// `C v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.per_bin(v, |f, x| {
            let m = &self.bins[f];
            let k = self.blocks;
            (0..k)
                .map(|i| (0..k).map(|j| m[i * k + j] * x[j]).sum())
                .collect()
        })
    }

    /// `C⁻¹ v`.
    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        self.per_bin(v, |f, x| cholesky_solve(&self.factors[f], self.blocks, x))
    }

    fn per_bin(
        &self,
        v: &[f64],
        op: impl Fn(usize, &[Complex<f64>]) -> Vec<Complex<f64>>,
    ) -> Vec<f64> {
        let (k, taps) = (self.blocks, self.taps);
        let specs: Vec<Vec<Complex<f64>>> = v
            .chunks_exact(taps)
            .map(|seg| self.spectral.forward(seg))
            .collect();
        let nbins = self.bins.len();
        let mut outs = vec![vec![Complex::new(0.0, 0.0); nbins]; k];
        let mut x = vec![Complex::new(0.0, 0.0); k];
        for f in 0..nbins {
            for (xi, spec) in x.iter_mut().zip(&specs) {
                *xi = spec[f];
            }
            for (out, y) in outs.iter_mut().zip(op(f, &x)) {
                out[f] = y;
            }
        }
        let scale = 1.0 / taps as f64;
        outs.into_iter()
            .flat_map(|spec| self.spectral.inverse(spec).into_iter().map(move |x| x * scale))
            .collect()
    }
}

impl Preconditioner for BlockCirculantPreconditioner {
    fn dim(&self) -> usize {
        self.blocks * self.taps
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&self.apply_inverse(r));
    }
}

/// Cholesky factor `G` (lower, row-major) of a Hermitian matrix with
/// `A = G Gᴴ`, reading only the lower triangle. `None` if not positive definite.
fn cholesky(a: &[Complex<f64>], n: usize) -> Option<Vec<Complex<f64>>> {
    let scale = (0..n).fold(0.0f64, |m, i| m.max(a[i * n + i].re.abs()));
    let mut g = vec![Complex::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for p in 0..j {
            d -= g[j * n + p].norm_sqr();
        }
        if d.is_nan() || d <= f64::EPSILON * scale {
            return None;
        }
        let djj = d.sqrt();
        g[j * n + j] = Complex::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for p in 0..j {
                s -= g[i * n + p] * g[j * n + p].conj();
            }
            g[i * n + j] = s / djj;
        }
    }
    Some(g)
}

fn cholesky_solve(g: &[Complex<f64>], n: usize, b: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let mut y = b.to_vec();
    for i in 0..n {
        for p in 0..i {
            let t = g[i * n + p] * y[p];
            y[i] -= t;
        }
        y[i] /= g[i * n + i];
    }
    for i in (0..n).rev() {
        for p in i + 1..n {
            let t = g[p * n + i].conj() * y[p];
            y[i] -= t;
        }
        y[i] /= g[i * n + i];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Autocorrelation of a random signal, so the Toeplitz matrix is SPD.
    fn spd_column(rng: &mut ChaCha8Rng, taps: usize) -> Vec<f64> {
        let s: Vec<f64> = (0..4 * taps).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (0..taps)
            .map(|lag| s.iter().zip(&s[lag..]).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn circulant_dense(col: &[f64]) -> DMatrix<f64> {
        let n = col.len();
        DMatrix::from_fn(n, n, |i, j| col[(i + n - j) % n])
    }

    #[test]
    fn identity_maps_to_identity() {
        let mut col = vec![0.0; 8];
        col[0] = 1.0;
        let p = CirculantPreconditioner::new(&SymmetricToeplitz::new(col.clone()).unwrap()).unwrap();
        assert_eq!(p.first_column(), &col[..]);
        for lam in p.eigenvalues() {
            assert!((lam - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_tap_formula() {
        let p = CirculantPreconditioner::new(&SymmetricToeplitz::new(vec![2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(p.first_column(), &[2.0, 1.0]);
    }

    #[test]
    fn general_formula_reduces_to_symmetric_one() {
        // Symmetric form: c_0 = r_0, c_ℓ = ((L-ℓ) r_ℓ + ℓ r_{L-ℓ}) / L.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for taps in [1usize, 2, 5, 16] {
            let r = spd_column(&mut rng, taps);
            let lags: Vec<f64> = r[1..].iter().rev().chain(r.iter()).copied().collect();
            let general = optimal_circulant_column(&lags, taps);
            let lf = taps as f64;
            for ell in 0..taps {
                let want = if ell == 0 {
                    r[0]
                } else {
                    ((lf - ell as f64) * r[ell] + ell as f64 * r[taps - ell]) / lf
                };
                assert!((general[ell] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn beats_off_by_one_wraparound() {
        // Pairing r_ℓ with r_{L-ℓ-1} instead of r_{L-ℓ} gives a worse circulant.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r = spd_column(&mut rng, 16);
        let op = SymmetricToeplitz::new(r.clone()).unwrap();
        let dense = op.to_dense();
        let lf = 16.0;
        let shifted: Vec<f64> = (0..16)
            .map(|l| {
                if l == 0 {
                    r[0]
                } else {
                    ((lf - l as f64) * r[l] + l as f64 * r[15 - l]) / lf
                }
            })
            .collect();
        let best = CirculantPreconditioner::new(&op).unwrap();
        assert!((circulant_dense(best.first_column()) - &dense).norm() < (circulant_dense(&shifted) - &dense).norm());
    }

    #[test]
    fn frobenius_optimal_against_random_circulants() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let r = spd_column(&mut rng, 32);
        let op = SymmetricToeplitz::new(r).unwrap();
        let dense = op.to_dense();
        let best = CirculantPreconditioner::new(&op).unwrap();
        let best_err = (circulant_dense(best.first_column()) - &dense).norm();
        for _ in 0..100 {
            let perturbed: Vec<f64> = best
                .first_column()
                .iter()
                .map(|c| c + rng.gen_range(-0.1..0.1))
                .collect();
            let err = (circulant_dense(&perturbed) - &dense).norm();
            assert!(best_err <= err);
        }
    }

    #[test]
    fn circulant_is_a_fixed_point() {
        // A symmetric circulant viewed as a Toeplitz matrix.
        let c = [4.0, 1.0, 0.5, 0.25, 0.5, 1.0];
        let op = SymmetricToeplitz::new(c.to_vec()).unwrap();
        let p = CirculantPreconditioner::new(&op).unwrap();
        for (a, b) in p.first_column().iter().zip(c) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn non_positive_is_rejected() {
        let op = SymmetricToeplitz::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            CirculantPreconditioner::new(&op),
            Err(Error::NonPositivePreconditioner { .. })
        ));
    }

    fn random_spd_block(rng: &mut ChaCha8Rng, k: usize, taps: usize) -> BlockToeplitz {
        let n = 6 * taps;
        let sigs: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let corr = |a: &[f64], b: &[f64], lag: isize| -> f64 {
            (0..n as isize)
                .filter(|u| (0..n as isize).contains(&(u + lag)))
                .map(|u| a[u as usize] * b[(u + lag) as usize])
                .sum()
        };
        let lags = (0..k * k)
            .map(|i| {
                (-(taps as isize - 1)..taps as isize)
                    .map(|lag| corr(&sigs[i / k], &sigs[i % k], lag))
                    .collect()
            })
            .collect();
        BlockToeplitz::new(k, taps, lags).unwrap()
    }

    #[test]
    fn block_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let op = random_spd_block(&mut rng, 2, 4);
        let p = BlockCirculantPreconditioner::new(&op).unwrap();
        let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = p.apply_inverse(&p.apply(&v));
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn single_block_matches_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let op = random_spd_block(&mut rng, 1, 9);
        let block = BlockCirculantPreconditioner::new(&op).unwrap();
        let scalar = CirculantPreconditioner::new(
            &SymmetricToeplitz::new(op.block(0, 0)[8..].to_vec()).unwrap(),
        )
        .unwrap();
        let eig = scalar.eigenvalues();
        for f in 0..block.num_bins() {
            assert!((block.bin_matrix(f)[0].re - eig[f]).abs() < 1e-12);
        }
        let v: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = block.apply_inverse(&v);
        let b = scalar.apply_inverse(&v);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn decoupled_sources_give_diagonal_bins() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let full = random_spd_block(&mut rng, 2, 6);
        let mut lags: Vec<Vec<f64>> = (0..4).map(|i| full.block(i / 2, i % 2).to_vec()).collect();
        lags[1].iter_mut().for_each(|x| *x = 0.0);
        lags[2].iter_mut().for_each(|x| *x = 0.0);
        let op = BlockToeplitz::new(2, 6, lags).unwrap();
        let p = BlockCirculantPreconditioner::new(&op).unwrap();
        let eig: Vec<Vec<f64>> = (0..2)
            .map(|k| {
                CirculantPreconditioner::new(
                    &SymmetricToeplitz::new(op.block(k, k)[5..].to_vec()).unwrap(),
                )
                .unwrap()
                .eigenvalues()
            })
            .collect();
        for f in 0..p.num_bins() {
            let m = p.bin_matrix(f);
            assert_eq!(m[1].norm(), 0.0);
            assert_eq!(m[2].norm(), 0.0);
            assert!((m[0].re - eig[0][f]).abs() < 1e-12);
            assert!((m[3].re - eig[1][f]).abs() < 1e-12);
        }
    }

    #[test]
    fn bins_are_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let op = random_spd_block(&mut rng, 3, 8);
        let p = BlockCirculantPreconditioner::new(&op).unwrap();
        for f in 0..p.num_bins() {
            let m = p.bin_matrix(f);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((m[i * 3 + j] - m[j * 3 + i].conj()).norm() < 1e-12);
                }
            }
        }
    }
}
