use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::fft::fast_len;

/// Real FFT pair of a fixed length, with a helper for circular convolution.
#[derive(Clone)]
pub(crate) struct RealSpectral {
    len: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl RealSpectral {
    pub(crate) fn new(len: usize) -> Self {
        let mut planner = RealFftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    /// Forward transform of `x`, zero-padded to the transform length.
    pub(crate) fn forward(&self, x: &[f64]) -> Vec<Complex<f64>> {
        let mut buf = vec![0.0; self.len];
        buf[..x.len()].copy_from_slice(x);
        let mut out = self.forward.make_output_vec();
        self.forward
            .process(&mut buf, &mut out)
            .expect("buffer sizes match the plan");
        out
    }

    /// Unnormalized inverse transform.
    pub(crate) fn inverse(&self, mut spec: Vec<Complex<f64>>) -> Vec<f64> {
        spec[0].im = 0.0;
        if self.len.is_multiple_of(2) {
            if let Some(last) = spec.last_mut() {
                last.im = 0.0;
            }
        }
        let mut out = self.inverse.make_output_vec();
        self.inverse
            .process(&mut spec, &mut out)
            .expect("buffer sizes match the plan");
        out
    }
}

impl fmt::Debug for RealSpectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealSpectral").field("len", &self.len).finish()
    }
}

/// Spectrum of the circulant embedding of a Toeplitz matrix with entries
/// `t[i - j]`, where `lags` runs over `-(L-1)..=L-1`.
fn embedding_spectrum(spectral: &RealSpectral, lags: &[f64], taps: usize) -> Vec<Complex<f64>> {
    let n = spectral.len();
    let mut col = vec![0.0; n];
    col[0] = lags[taps - 1];
    for lag in 1..taps {
        col[lag] = lags[taps - 1 + lag];
        col[n - lag] = lags[taps - 1 - lag];
    }
    spectral.forward(&col)
}

/// Symmetric Toeplitz matrix given by its first column.
#[derive(Debug, Clone)]
pub struct SymmetricToeplitz {
    column: Vec<f64>,
    spectral: RealSpectral,
    spectrum: Vec<Complex<f64>>,
}

impl SymmetricToeplitz {
    pub fn new(column: Vec<f64>) -> Result<Self> {
        if column.is_empty() {
            return Err(Error::EmptyInput);
        }
        let taps = column.len();
        let spectral = RealSpectral::new(fast_len(2 * taps - 1));
        let lags: Vec<f64> = column[1..]
            .iter()
            .rev()
            .chain(column.iter())
            .copied()
            .collect();
        let spectrum = embedding_spectrum(&spectral, &lags, taps);
        Ok(Self {
            column,
            spectral,
            spectrum,
        })
    }

    pub fn size(&self) -> usize {
        self.column.len()
    }

    pub fn column(&self) -> &[f64] {
        &self.column
    }

    /// Same operator with `loading` added to the diagonal.
    pub fn with_loading(&self, loading: f64) -> Self {
        if loading == 0.0 {
            return self.clone();
        }
        let mut column = self.column.clone();
        column[0] += loading;
        Self::new(column).expect("column is non-empty")
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                actual: v.len(),
            });
        }
        let mut out = vec![0.0; self.size()];
        self.apply(v, &mut out);
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.column[i.abs_diff(j)])
    }
}

impl LinearOperator for SymmetricToeplitz {
    fn dim(&self) -> usize {
        self.size()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut spec = self.spectral.forward(x);
        spec.iter_mut()
            .zip(&self.spectrum)
            .for_each(|(a, b)| *a *= b);
        let full = self.spectral.inverse(spec);
        let scale = 1.0 / self.spectral.len() as f64;
        for (dst, src) in y.iter_mut().zip(&full) {
            *dst = src * scale;
        }
    }
}

/// Symmetric block matrix of `K × K` Toeplitz blocks of size `L × L`.
///
/// Block `(k, l)` has entries `t_kl[a - b]`; symmetry of the whole
/// operator requires `t_lk[τ] = t_kl[-τ]`.
#[derive(Debug, Clone)]
pub struct BlockToeplitz {
    blocks: usize,
    taps: usize,
    /// Row-major `K²` generating sequences of length `2L-1` (lag `-(L-1)` first).
    lags: Vec<Vec<f64>>,
    spectral: RealSpectral,
    spectra: Vec<Vec<Complex<f64>>>,
}

impl BlockToeplitz {
    pub fn new(blocks: usize, taps: usize, lags: Vec<Vec<f64>>) -> Result<Self> {
        if blocks == 0 || taps == 0 {
            return Err(Error::EmptyInput);
        }
        if lags.len() != blocks * blocks {
            return Err(Error::DimensionMismatch {
                expected: blocks * blocks,
                actual: lags.len(),
            });
        }
        if let Some(bad) = lags.iter().find(|s| s.len() != 2 * taps - 1) {
            return Err(Error::DimensionMismatch {
                expected: 2 * taps - 1,
                actual: bad.len(),
            });
        }
        let spectral = RealSpectral::new(fast_len(2 * taps - 1));
        let spectra = lags
            .iter()
            .map(|s| embedding_spectrum(&spectral, s, taps))
            .collect();
        Ok(Self {
            blocks,
            taps,
            lags,
            spectral,
            spectra,
        })
    }

    /// Number of block rows `K`.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn size(&self) -> usize {
        self.blocks * self.taps
    }

    /// Generating sequence of block `(k, l)`.
    pub fn block(&self, k: usize, l: usize) -> &[f64] {
        &self.lags[k * self.blocks + l]
    }

    /// Same operator with `loading[k]` added to the diagonal of block `(k, k)`.
    pub fn with_loading(&self, loading: &[f64]) -> Self {
        let mut lags = self.lags.clone();
        for (k, &load) in loading.iter().enumerate() {
            lags[k * self.blocks + k][self.taps - 1] += load;
        }
        Self::new(self.blocks, self.taps, lags).expect("shape unchanged")
    }

    /// Lag-0 value of every diagonal block.
    pub fn diagonal_lag0(&self) -> Vec<f64> {
        (0..self.blocks)
            .map(|k| self.block(k, k)[self.taps - 1])
            .collect()
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                actual: v.len(),
            });
        }
        let mut out = vec![0.0; self.size()];
        self.apply(v, &mut out);
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (k, l) = (self.blocks, self.taps);
        DMatrix::from_fn(k * l, k * l, |i, j| {
            let (bi, a) = (i / l, i % l);
            let (bj, b) = (j / l, j % l);
            self.block(bi, bj)[(a as isize - b as isize + l as isize - 1) as usize]
        })
    }
}

impl LinearOperator for BlockToeplitz {
    fn dim(&self) -> usize {
        self.size()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let taps = self.taps;
        let inputs: Vec<Vec<Complex<f64>>> = x
            .chunks_exact(taps)
            .map(|seg| self.spectral.forward(seg))
            .collect();
        let scale = 1.0 / self.spectral.len() as f64;
        for (k, out) in y.chunks_exact_mut(taps).enumerate() {
            let mut acc = vec![Complex::new(0.0, 0.0); inputs[0].len()];
            for (l, input) in inputs.iter().enumerate() {
                let spec = &self.spectra[k * self.blocks + l];
                for ((a, s), v) in acc.iter_mut().zip(spec).zip(input) {
                    *a += s * v;
                }
            }
            let full = self.spectral.inverse(acc);
            for (dst, src) in out.iter_mut().zip(&full) {
                *dst = src * scale;
            }
        }
    }
}
