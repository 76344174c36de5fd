//! Auto- and cross-correlations of the references and estimates.
//!
//! With `A_k` the `(T+L-1) × L` matrix whose columns are the `L` delayed
//! copies of reference `k`, every quantity the solvers need is a
//! correlation sequence:
//!
//! ```text
//! (A_k^T A_l)[a, b] = ρ_kl(a - b),   ρ_kl(τ) = Σ_u s_k(u) s_l(u + τ)
//! (A_k^T ŝ_m)[j]    = Σ_u s_k(u) ŝ_m(u + j)
//! ```
//!
//! All of them come from one real FFT per channel followed by one inverse
//! FFT per requested pair.

use rayon::prelude::*;
use realfft::num_complex::Complex;
use realfft::RealFftPlanner;

use crate::config::Precision;
use crate::error::Result;
use crate::fft::fast_len;
use crate::signal::MultichannelSignal;

/// Correlation sequences defining the Gram blocks `A_k^T A_l` and the
/// cross-correlations `x_km = A_k^T ŝ_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet {
    taps: usize,
    samples: usize,
    num_refs: usize,
    num_ests: usize,
    /// `num_refs²` slots, row-major; off-diagonal slots are `None` unless requested.
    acf: Vec<Option<Vec<f64>>>,
    /// `num_refs × num_ests`, row-major; each of length `taps`.
    xcorr: Vec<Vec<f64>>,
}

impl CorrelationSet {
    /// Assembles a set from precomputed sequences.
    ///
    /// `acf` holds `K²` row-major entries of length `2L-1` (lag `-(L-1)` first);
    /// `xcorr` holds `K·M` row-major entries of length `L`.
    pub fn from_parts(
        taps: usize,
        samples: usize,
        num_refs: usize,
        num_ests: usize,
        acf: Vec<Option<Vec<f64>>>,
        xcorr: Vec<Vec<f64>>,
    ) -> Result<Self> {
        use crate::error::Error;
        if acf.len() != num_refs * num_refs {
            return Err(Error::DimensionMismatch {
                expected: num_refs * num_refs,
                actual: acf.len(),
            });
        }
        if xcorr.len() != num_refs * num_ests {
            return Err(Error::DimensionMismatch {
                expected: num_refs * num_ests,
                actual: xcorr.len(),
            });
        }
        for (i, seq) in acf.iter().enumerate() {
            match seq {
                Some(s) if s.len() != 2 * taps - 1 => {
                    return Err(Error::DimensionMismatch {
                        expected: 2 * taps - 1,
                        actual: s.len(),
                    })
                }
                None if i / num_refs == i % num_refs => {
                    return Err(Error::InvalidConfig(format!(
                        "diagonal correlation {} missing",
                        i / num_refs
                    )))
                }
                _ => {}
            }
        }
        if let Some(x) = xcorr.iter().find(|x| x.len() != taps) {
            return Err(Error::DimensionMismatch {
                expected: taps,
                actual: x.len(),
            });
        }
        Ok(Self {
            taps,
            samples,
            num_refs,
            num_ests,
            acf,
            xcorr,
        })
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn num_refs(&self) -> usize {
        self.num_refs
    }

    pub fn num_ests(&self) -> usize {
        self.num_ests
    }

    /// Whether the off-diagonal Gram blocks were computed.
    pub fn has_cross_blocks(&self) -> bool {
        self.num_refs == 1 || self.acf.iter().all(Option::is_some)
    }

    /// Correlation between references `k` and `l` for lags `-(L-1)..=L-1`.
    pub fn acf(&self, k: usize, l: usize) -> Option<&[f64]> {
        self.acf[k * self.num_refs + l].as_deref()
    }

    /// `ρ_kl(lag)`.
    pub fn acf_at(&self, k: usize, l: usize, lag: isize) -> Option<f64> {
        let idx = lag + self.taps as isize - 1;
        self.acf(k, l).map(|s| s[idx as usize])
    }

    /// First column of the symmetric Toeplitz matrix `A_k^T A_k`.
    pub fn toeplitz_column(&self, k: usize) -> &[f64] {
        let seq = self.acf[k * self.num_refs + k]
            .as_deref()
            .expect("diagonal correlations are always present");
        &seq[self.taps - 1..]
    }

    /// `x_km = A_k^T ŝ_m`.
    pub fn xcorr(&self, k: usize, m: usize) -> &[f64] {
        &self.xcorr[k * self.num_ests + m]
    }

    /// `z_m`, the stacking of `x_1m, …, x_Km`.
    pub fn stacked_xcorr(&self, m: usize) -> Vec<f64> {
        (0..self.num_refs)
            .flat_map(|k| self.xcorr(k, m).iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrelationOptions {
    /// Compute the off-diagonal Gram blocks (needed for SIR and SAR only).
    pub cross_blocks: bool,
    pub precision: Precision,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        Self {
            cross_blocks: true,
            precision: Precision::Double,
        }
    }
}

/// Computes every correlation sequence for filter length `taps`.
pub fn compute_correlations(
    references: &MultichannelSignal,
    estimates: &MultichannelSignal,
    taps: usize,
) -> Result<CorrelationSet> {
    compute_correlations_with(references, estimates, taps, CorrelationOptions::default())
}

pub fn compute_correlations_with(
    references: &MultichannelSignal,
    estimates: &MultichannelSignal,
    taps: usize,
    opts: CorrelationOptions,
) -> Result<CorrelationSet> {
    crate::signal::validate_pairing(references, estimates, taps)?;
    let samples = references.len();
    let num_refs = references.num_channels();
    let num_ests = estimates.num_channels();
    let n = fast_len(samples + taps - 1);

    let mut planner = RealFftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let spectrum = |x: &[f64]| -> Vec<Complex<f64>> {
        let mut buf = vec![0.0; n];
        buf[..x.len()].copy_from_slice(x);
        let mut out = forward.make_output_vec();
        forward
            .process(&mut buf, &mut out)
            .expect("buffer sizes match the plan");
        out
    };
    let ref_spec: Vec<_> = references.channels().collect::<Vec<_>>().par_iter().map(|c| spectrum(c)).collect();
    let est_spec: Vec<_> = estimates.channels().collect::<Vec<_>>().par_iter().map(|c| spectrum(c)).collect();

    // Inverse transform of conj(a)·b, i.e. the sequence Σ_u a(u) b(u + τ).
    let correlate = |a: &[Complex<f64>], b: &[Complex<f64>]| -> Vec<f64> {
        let mut prod: Vec<Complex<f64>> = a.iter().zip(b).map(|(x, y)| x.conj() * y).collect();
        // Imaginary parts of DC and Nyquist bins are zero in exact arithmetic.
        prod[0].im = 0.0;
        if let Some(last) = prod.last_mut() {
            last.im = 0.0;
        }
        let mut out = inverse.make_output_vec();
        inverse
            .process(&mut prod, &mut out)
            .expect("buffer sizes match the plan");
        let scale = 1.0 / n as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        out
    };

    let lag_window = |full: &[f64]| -> Vec<f64> {
        let mut seq = Vec::with_capacity(2 * taps - 1);
        seq.extend((1..taps).rev().map(|lag| full[n - lag]));
        seq.extend_from_slice(&full[..taps]);
        opts.precision.store_all(&mut seq);
        seq
    };

    let pairs: Vec<(usize, usize)> = (0..num_refs)
        .flat_map(|k| (k..num_refs).map(move |l| (k, l)))
        .filter(|&(k, l)| k == l || opts.cross_blocks)
        .collect();
    let upper: Vec<((usize, usize), Vec<f64>)> = pairs
        .par_iter()
        .map(|&(k, l)| ((k, l), lag_window(&correlate(&ref_spec[k], &ref_spec[l]))))
        .collect();

    let mut acf = vec![None; num_refs * num_refs];
    for ((k, l), seq) in upper {
        if k != l {
            let mut rev = seq.clone();
            rev.reverse();
            acf[l * num_refs + k] = Some(rev);
        }
        acf[k * num_refs + l] = Some(seq);
    }

    let xcorr: Vec<Vec<f64>> = (0..num_refs * num_ests)
        .into_par_iter()
        .map(|i| {
            let (k, m) = (i / num_ests, i % num_ests);
            let mut x = correlate(&ref_spec[k], &est_spec[m]);
            x.truncate(taps);
            opts.precision.store_all(&mut x);
            x
        })
        .collect();

    Ok(CorrelationSet {
        taps,
        samples,
        num_refs,
        num_ests,
        acf,
        xcorr,
    })
}
