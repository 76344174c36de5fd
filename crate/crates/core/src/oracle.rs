//! Dense, explicit bss_eval: shift matrices, orthogonal projections, the
//! target/interference/artifact decomposition and the energy-ratio
//! definitions of SDR, SIR and SAR.
//!
//! Everything here is cubic in `T + L - 1` and exists to check the fast
//! path. It inverts the Gram matrices with the same diagonal loading as the
//! structured solvers so both sides solve the same regularized systems.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::{clamp_unit, db_map};
use crate::signal::{normalize_unit_norm, MultichannelSignal};
use crate::solvers::factor_loaded;
use crate::synth;

/// Largest `T + L - 1` the oracle accepts.
pub const MAX_ORACLE_ROWS: usize = 4096;

/// `(T+L-1) × L` matrix whose column `j` is `s` delayed by `j` samples.
pub fn shift_matrix(s: &[f64], taps: usize) -> DMatrix<f64> {
    let rows = s.len() + taps - 1;
    DMatrix::from_fn(rows, taps, |i, j| {
        if i >= j && i - j < s.len() {
            s[i - j]
        } else {
            0.0
        }
    })
}

/// Projections onto the shifts of each reference and of all references.
#[derive(Debug, Clone)]
pub struct Projections {
    pub per_source: Vec<DMatrix<f64>>,
    pub joint: DMatrix<f64>,
    pub taps: usize,
}

fn projection(a: &DMatrix<f64>, lag0s: &[f64], taps: usize) -> Result<DMatrix<f64>> {
    let gram = a.transpose() * a;
    let (chol, _) = factor_loaded(&gram, lag0s, taps).map_err(|e| match e {
        Error::SingularSystem => Error::SingularGram,
        other => other,
    })?;
    let at = a.transpose();
    Ok(a * chol.solve(&at))
}

/// Builds `P_k` for every reference and `P` for all of them. References are
/// normalized first, as in the fast path.
pub fn build_projections(references: &MultichannelSignal, taps: usize) -> Result<Projections> {
    let rows = references.len() + taps - 1;
    if rows > MAX_ORACLE_ROWS {
        return Err(Error::OracleTooLarge {
            rows,
            cap: MAX_ORACLE_ROWS,
        });
    }
    let refs = normalize_unit_norm(references)?;
    let shifts: Vec<DMatrix<f64>> = refs.channels().map(|s| shift_matrix(s, taps)).collect();
    let lag0 = |a: &DMatrix<f64>| a.column(0).norm_squared();
    let per_source = shifts
        .iter()
        .map(|a| projection(a, &[lag0(a)], taps))
        .collect::<Result<Vec<_>>>()?;
    let k = shifts.len();
    let mut all = DMatrix::zeros(rows, k * taps);
    for (i, a) in shifts.iter().enumerate() {
        all.view_mut((0, i * taps), (rows, taps)).copy_from(a);
    }
    let lag0s: Vec<f64> = shifts.iter().map(lag0).collect();
    let joint = projection(&all, &lag0s, taps)?;
    Ok(Projections {
        per_source,
        joint,
        taps,
    })
}

/// `s_target + e_interf + e_artif` split of one estimate against one reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub s_target: Vec<f64>,
    pub e_interf: Vec<f64>,
    pub e_artif: Vec<f64>,
}

/// Zero-pads `x` to `rows` samples.
pub fn pad(x: &[f64], rows: usize) -> DVector<f64> {
    let mut v = DVector::zeros(rows);
    v.rows_mut(0, x.len()).copy_from_slice(x);
    v
}

/// Decomposes one (already normalized) estimate against every reference.
pub fn decompose_with(proj: &Projections, estimate: &[f64]) -> Vec<Decomposition> {
    let rows = proj.joint.nrows();
    let est = pad(estimate, rows);
    let joint = &proj.joint * &est;
    proj.per_source
            .iter()
            .map(|pk| {
                let target = pk * &est;
                Decomposition {
                    e_interf: (&joint - &target).as_slice().to_vec(),
                    e_artif: (&est - &joint).as_slice().to_vec(),
                    s_target: target.as_slice().to_vec(),
                }
            })
            .collect()
}

/// Decomposes estimate channel `m` against every reference.
pub fn decompose(
    references: &MultichannelSignal,
    estimates: &MultichannelSignal,
    m: usize,
    taps: usize,
) -> Result<Vec<Decomposition>> {
    let proj = build_projections(references, taps)?;
    let ests = normalize_unit_norm(estimates)?;
    Ok(decompose_with(&proj, ests.channel(m)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMetrics {
    pub sdr: f64,
    pub sir: f64,
    pub sar: f64,
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `10 log10(num / den)` evaluated as `f(num / (num + den))` under the shared clamp.
fn ratio_db(num: f64, den: f64, eps: f64) -> f64 {
    let total = num + den;
    let frac = if total > 0.0 { num / total } else { 0.0 };
    db_map(clamp_unit(frac, eps).0)
}

/// SDR, SIR and SAR from their energy-ratio definitions.
pub fn metrics_via_decomposition(d: &Decomposition, clamp_epsilon: f64) -> OracleMetrics {
    let target = energy(&d.s_target);
    let distortion: Vec<f64> = d.e_interf.iter().zip(&d.e_artif).map(|(a, b)| a + b).collect();
    let projected: Vec<f64> = d.s_target.iter().zip(&d.e_interf).map(|(a, b)| a + b).collect();
    OracleMetrics {
        sdr: ratio_db(target, energy(&distortion), clamp_epsilon),
        sir: ratio_db(target, energy(&d.e_interf), clamp_epsilon),
        sar: ratio_db(energy(&projected), energy(&d.e_artif), clamp_epsilon),
    }
}

/// Pairwise oracle metrics, `[k][m]`.
pub fn oracle_bss_eval(
    references: &MultichannelSignal,
    estimates: &MultichannelSignal,
    taps: usize,
    clamp_epsilon: f64,
) -> Result<Vec<Vec<OracleMetrics>>> {
    crate::signal::validate_pairing(references, estimates, taps)?;
    let proj = build_projections(references, taps)?;
    let ests = normalize_unit_norm(estimates)?;
    let per_est: Vec<Vec<Decomposition>> = ests.channels().map(|e| decompose_with(&proj, e)).collect();
    Ok((0..references.num_channels())
        .map(|k| {
            per_est
                .iter()
                .map(|d| metrics_via_decomposition(&d[k], clamp_epsilon))
                .collect()
        })
        .collect())
}

/// Convolutive mixture `ŝ_m = Σ_k h_mk ⋆ s_k + b_m`, truncated to `T` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    /// `filters[m][k]`, the short impulse response from source `k` to estimate `m`.
    pub filters: Vec<Vec<Vec<f64>>>,
    /// Per-source gain applied before filtering.
    pub gains: Vec<f64>,
    /// Standard deviation of the additive white Gaussian noise.
    pub noise_std: f64,
}

impl MixtureSpec {
    /// Every estimate is the matching reference, no noise.
    pub fn identity(channels: usize) -> Self {
        Self {
            filters: (0..channels)
                .map(|m| (0..channels).map(|k| vec![if k == m { 1.0 } else { 0.0 }]).collect())
                .collect(),
            gains: vec![1.0; channels],
            noise_std: 0.0,
        }
    }

    /// Random filters with a dominant direct path per estimate, as produced by
    /// an imperfect separation.
    pub fn random(rng: &mut impl Rng, sources: usize, estimates: usize, taps: usize, noise_std: f64) -> Self {
        let filters = (0..estimates)
            .map(|m| {
                (0..sources)
                    .map(|k| {
                        let weight = if k == m % sources { 1.0 } else { 0.3 };
                        (0..taps)
                            .map(|t| {
                                let n: f64 = rng.sample(StandardNormal);
                                weight * n * 0.7f64.powi(t as i32)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            filters,
            gains: (0..sources).map(|_| rng.gen_range(0.5..2.0)).collect(),
            noise_std,
        }
    }
}

pub fn generate_mixture(
    references: &MultichannelSignal,
    spec: &MixtureSpec,
    seed: u64,
) -> Result<MultichannelSignal> {
    let k = references.num_channels();
    let len = references.len();
    if spec.gains.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: spec.gains.len(),
        });
    }
    if let Some(row) = spec.filters.iter().find(|row| row.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: row.len(),
        });
    }
    let mut rng = synth::rng(seed);
    let chans = spec
        .filters
        .iter()
        .map(|row| {
            let mut out = vec![0.0; len];
            for ((s, h), g) in references.channels().zip(row).zip(&spec.gains) {
                for (lag, &tap) in h.iter().enumerate() {
                    if tap == 0.0 {
                        continue;
                    }
                    for t in lag..len {
                        out[t] += g * tap * s[t - lag];
                    }
                }
            }
            if spec.noise_std != 0.0 {
                for v in out.iter_mut() {
                    let n: f64 = rng.sample(StandardNormal);
                    *v += spec.noise_std * n;
                }
            }
            out
        })
        .collect();
    MultichannelSignal::new(chans, references.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn shift_matrix_columns() {
        let a = shift_matrix(&[1.0, 2.0, 3.0], 2);
        assert_eq!(a.nrows(), 4);
        assert_eq!(a.column(0).as_slice(), &[1.0, 2.0, 3.0, 0.0]);
        assert_eq!(a.column(1).as_slice(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn single_tap_is_rank_one() {
        let mut rng = synth::rng(1);
        let refs = normalize_unit_norm(&synth::white(&mut rng, 1, 20, 1)).unwrap();
        let p = build_projections(&refs, 1).unwrap();
        let s = DVector::from_column_slice(refs.channel(0));
        assert!(max_abs(&(&p.per_source[0] - &s * s.transpose())) < 1e-12);
    }

    #[test]
    fn projection_properties() {
        let mut rng = synth::rng(2);
        let refs = synth::white(&mut rng, 2, 32, 1);
        let p = build_projections(&refs, 4).unwrap();
        let joint = &p.joint;
        assert!(max_abs(&(joint * joint - joint)) < 1e-8);
        assert!(max_abs(&(joint - joint.transpose())) < 1e-8);
        for pk in &p.per_source {
            assert!(max_abs(&(pk * pk - pk)) < 1e-8);
            assert!(max_abs(&(pk - pk.transpose())) < 1e-8);
            assert!(max_abs(&(pk * joint - pk)) < 1e-8);
            assert!(max_abs(&(joint * pk - pk)) < 1e-8);
            assert!((pk.trace() - 4.0).abs() < 1e-8);
        }
    }

    #[test]
    fn estimate_in_target_span() {
        let mut rng = synth::rng(3);
        let refs = synth::white(&mut rng, 2, 40, 1);
        let proj = build_projections(&refs, 3).unwrap();
        let s0 = normalize_unit_norm(&refs).unwrap();
        let h = DVector::from_column_slice(&[0.5, -1.0, 0.25]);
        let x = shift_matrix(s0.channel(0), 3) * h;
        let d = &decompose_with(&proj, x.as_slice())[0];
        assert!(d.e_interf.iter().all(|v| v.abs() < 1e-8));
        assert!(d.e_artif.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn orthogonal_estimate_is_all_artifact() {
        // References live on the first half of the signal, the estimate on the
        // second half beyond the reach of L shifts.
        let mut r = vec![0.0; 40];
        r[..10].iter_mut().enumerate().for_each(|(i, v)| *v = (i as f64 + 1.0).sin());
        let mut e = vec![0.0; 40];
        e[25..].iter_mut().enumerate().for_each(|(i, v)| *v = (i as f64).cos() + 0.5);
        let refs = MultichannelSignal::new(vec![r], 1).unwrap();
        let ests = MultichannelSignal::new(vec![e], 1).unwrap();
        let d = &decompose(&refs, &ests, 0, 4).unwrap()[0];
        let e_norm = normalize_unit_norm(&ests).unwrap();
        assert!(energy(&d.s_target) < 1e-16);
        assert!(energy(&d.e_interf) < 1e-16);
        for (a, b) in d.e_artif.iter().zip(e_norm.channel(0).iter().chain([0.0; 3].iter())) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn components_add_up() {
        let mut rng = synth::rng(4);
        let refs = synth::white(&mut rng, 2, 48, 1);
        let spec = MixtureSpec::random(&mut rng, 2, 2, 3, 0.1);
        let ests = generate_mixture(&refs, &spec, 9).unwrap();
        let e = normalize_unit_norm(&ests).unwrap();
        for m in 0..2 {
            let parts = decompose(&refs, &ests, m, 5).unwrap();
            for d in &parts {
                for i in 0..d.s_target.len() {
                    let sum = d.s_target[i] + d.e_interf[i] + d.e_artif[i];
                    let want = e.channel(m).get(i).copied().unwrap_or(0.0);
                    assert!((sum - want).abs() < 1e-10);
                }
                let st: f64 = d.s_target.iter().zip(&d.e_interf).map(|(a, b)| a * b).sum();
                let proj: Vec<f64> = d.s_target.iter().zip(&d.e_interf).map(|(a, b)| a + b).collect();
                let sa: f64 = proj.iter().zip(&d.e_artif).map(|(a, b)| a * b).sum();
                assert!(st.abs() < 1e-8 && sa.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn metric_edge_values() {
        let d = Decomposition {
            s_target: vec![1.0, 0.0],
            e_interf: vec![0.0, 0.0],
            e_artif: vec![0.0, 0.0],
        };
        let m = metrics_via_decomposition(&d, 1e-12);
        assert!((m.sdr - db_map(1.0 - 1e-12)).abs() < 1e-9);
        let d = Decomposition {
            s_target: vec![1.0, 0.0, 0.0],
            e_interf: vec![0.0, 0.6, 0.0],
            e_artif: vec![0.0, 0.0, 0.8],
        };
        assert!(metrics_via_decomposition(&d, 1e-12).sdr.abs() < 1e-12);
    }

    #[test]
    fn mixture_generation() {
        let mut rng = synth::rng(5);
        let refs = synth::white(&mut rng, 2, 30, 8000);
        let same = generate_mixture(&refs, &MixtureSpec::identity(2), 0).unwrap();
        assert_eq!(same, refs);

        let silent = MixtureSpec {
            filters: vec![vec![vec![0.0], vec![0.0]]],
            gains: vec![1.0, 1.0],
            noise_std: 1.0,
        };
        let a = generate_mixture(&refs, &silent, 77).unwrap();
        let b = generate_mixture(&refs, &silent, 77).unwrap();
        assert_eq!(a, b);
        let mut noise_rng = synth::rng(77);
        for &v in a.channel(0) {
            let n: f64 = noise_rng.sample(StandardNormal);
            assert_eq!(v, n);
        }
    }

    #[test]
    fn size_cap() {
        let refs = MultichannelSignal::new(vec![vec![1.0; 5000]], 1).unwrap();
        assert!(matches!(
            build_projections(&refs, 4),
            Err(Error::OracleTooLarge { .. })
        ));
    }
}
