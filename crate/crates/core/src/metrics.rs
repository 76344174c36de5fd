//! SDR, SIR and SAR through cosine metrics.
//!
//! For unit-norm signals the three energy ratios of bss_eval reduce to
//!
//! ```text
//! c_km = x_kmᵀ h_km      with R_k h_km = x_km
//! d_m  = Σ_k x_kmᵀ g_km  with R [g_1m; …; g_Km] = z_m
//! SDR_km = f(c_km),  SIR_km = f(c_km / d_m),  SAR_m = f(d_m)
//! f(x) = 10 log10(x / (1 - x))
//! ```
//!
//! so the full-length target/interference/artifact signals are never formed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{solve_assignment, ProfitMatrix};
use crate::config::{EvalConfig, MetricSet, Precision, Solver};
use crate::correlator::{compute_correlations_with, CorrelationOptions, CorrelationSet};
use crate::error::{Error, Result, Stage};
use crate::signal::{normalize_unit_norm, validate_pairing, MultichannelSignal};
use crate::solvers::{
    base_loading, cgd_solve_many, direct_solve, levinson_solve, BlockCirculantPreconditioner,
    BlockToeplitz, CgdOptions, CirculantPreconditioner, LinearOperator, SymmetricToeplitz,
};

/// `f(x) = 10 log10(x / (1 - x))`.
pub fn db_map(x: f64) -> f64 {
    10.0 * (x / (1.0 - x)).log10()
}

/// Clamps `x` into `[eps, 1 - eps]`; the flag reports whether it moved.
pub fn clamp_unit(x: f64, eps: f64) -> (f64, bool) {
    if x.is_nan() || x < eps {
        (eps, true)
    } else if x > 1.0 - eps {
        (1.0 - eps, true)
    } else {
        (x, false)
    }
}

/// Per-source filters `h` and, when the joint system was solved, joint filters `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionFilters {
    num_refs: usize,
    num_ests: usize,
    taps: usize,
    h: Vec<Vec<f64>>,
    g: Option<Vec<Vec<f64>>>,
}

impl DistortionFilters {
    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn h(&self, k: usize, m: usize) -> &[f64] {
        &self.h[k * self.num_ests + m]
    }

    pub fn g(&self, k: usize, m: usize) -> Option<&[f64]> {
        self.g.as_ref().map(|g| g[k * self.num_ests + m].as_slice())
    }

    pub fn has_joint(&self) -> bool {
        self.g.is_some()
    }

    /// `[h_1m; …; h_Km]`.
    pub fn stacked_h(&self, m: usize) -> Vec<f64> {
        (0..self.num_refs)
            .flat_map(|k| self.h(k, m).iter().copied())
            .collect()
    }
}

/// How one Toeplitz or block-Toeplitz system was solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    /// Reference index for per-source systems, estimate index for joint ones.
    pub index: usize,
    pub solver: Solver,
    /// Set when the requested solver failed and this one took over.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback_from: Option<Solver>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
    /// Iterations per right-hand side (zero for non-iterative solvers).
    pub iterations: Vec<usize>,
    /// Relative residual `‖Rx - b‖ / ‖b‖` per right-hand side.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampedQuantity {
    C,
    D,
    COverD,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampEvent {
    pub quantity: ClampedQuantity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<usize>,
    pub estimate: usize,
    pub raw: f64,
    pub clamped: f64,
    /// The raw value was negative, which only solver error can cause.
    pub negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub solver: Solver,
    pub sdr_systems: Vec<SystemReport>,
    pub sir_systems: Vec<SystemReport>,
    /// Number of per-source Toeplitz right-hand sides solved.
    pub toeplitz_solves: usize,
    /// Number of joint block-Toeplitz right-hand sides solved.
    pub block_solves: usize,
    pub clamp_events: Vec<ClampEvent>,
}

impl Diagnostics {
    pub fn fallbacks(&self) -> usize {
        self.sdr_systems
            .iter()
            .chain(&self.sir_systems)
            .filter(|r| r.fallback_from.is_some())
            .count()
    }
}

/// `c_km` and, when the joint system was solved, `d_m`. Values are raw
/// (unclamped) so solver error stays visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineMetrics {
    pub num_refs: usize,
    pub num_ests: usize,
    /// Row-major `K × M`.
    pub c: Vec<f64>,
    pub d: Option<Vec<f64>>,
}

impl CosineMetrics {
    pub fn c(&self, k: usize, m: usize) -> f64 {
        self.c[k * self.num_ests + m]
    }

    pub fn d(&self, m: usize) -> Option<f64> {
        self.d.as_ref().map(|d| d[m])
    }

    /// Angle between the estimate and the span of the shifts of reference `k`.
    pub fn alpha(&self, k: usize, m: usize) -> f64 {
        self.c(k, m).clamp(0.0, 1.0).sqrt().acos()
    }

    /// Angle between `P_k ŝ_m` and `P ŝ_m`.
    pub fn beta(&self, k: usize, m: usize) -> Option<f64> {
        self.d(m)
            .map(|d| (self.c(k, m) / d).clamp(0.0, 1.0).sqrt().acos())
    }

    /// Angle between the estimate and the span of all references.
    pub fn gamma(&self, m: usize) -> Option<f64> {
        self.d(m).map(|d| d.clamp(0.0, 1.0).sqrt().acos())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedMetrics {
    pub reference: usize,
    pub estimate: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sdr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sir: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BssEvalResult {
    pub num_refs: usize,
    pub num_ests: usize,
    /// `sdr[k][m]` in dB.
    pub sdr: Option<Vec<Vec<f64>>>,
    pub sir: Option<Vec<Vec<f64>>>,
    /// Per estimate; the artifact ratio does not depend on the reference.
    pub sar: Option<Vec<f64>>,
    /// `permutation[k]` is the estimate assigned to reference `k`.
    pub permutation: Option<Vec<Option<usize>>>,
    pub cosine: CosineMetrics,
    pub diagnostics: Diagnostics,
}

impl BssEvalResult {
    /// Metrics of the assigned pairs, in reference order.
    pub fn aligned(&self) -> Vec<AlignedMetrics> {
        let Some(perm) = &self.permutation else {
            return Vec::new();
        };
        perm.iter()
            .enumerate()
            .filter_map(|(k, m)| m.map(|m| (k, m)))
            .map(|(k, m)| AlignedMetrics {
                reference: k,
                estimate: m,
                sdr: self.sdr.as_ref().map(|s| s[k][m]),
                sir: self.sir.as_ref().map(|s| s[k][m]),
                sar: self.sar.as_ref().map(|s| s[m]),
            })
            .collect()
    }
}

fn cgd_options(cfg: &EvalConfig) -> CgdOptions {
    CgdOptions {
        max_iters: cfg.cgd_iters,
        rel_tol: cfg.cgd_tol,
        record_residuals: false,
        precision: cfg.precision,
    }
}

fn relative_residuals(op: &dyn LinearOperator, xs: &[Vec<f64>], rhs: &[Vec<f64>]) -> Vec<f64> {
    xs.iter()
        .zip(rhs)
        .map(|(x, b)| {
            let mut y = vec![0.0; x.len()];
            op.apply(x, &mut y);
            let num: f64 = y.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
            let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            if den > 0.0 {
                num / den
            } else {
                num
            }
        })
        .collect()
}

/// Iterative or recursive attempt; `None` means the solver does not apply here.
type Attempt = Option<Result<(Vec<Vec<f64>>, Vec<usize>)>>;

/// Runs the requested solver and falls back to the direct one on failure.
fn solve_with_fallback(
    index: usize,
    requested: Solver,
    attempt: impl FnOnce() -> Attempt,
    direct: impl FnOnce() -> Result<Vec<Vec<f64>>>,
    residual_op: &dyn LinearOperator,
    rhs: &[Vec<f64>],
    precision: Precision,
) -> Result<(Vec<Vec<f64>>, SystemReport)> {
    let (mut xs, solver, iterations, fallback) = match attempt() {
        Some(Ok((xs, iters))) => (xs, requested, iters, None),
        other => {
            let reason = match other {
                Some(Err(e)) => Some((requested, e.to_string())),
                _ => None,
            };
            (direct()?, Solver::Direct, vec![0; rhs.len()], reason)
        }
    };
    xs.iter_mut().for_each(|x| precision.store_all(x));
    let residuals = relative_residuals(residual_op, &xs, rhs);
    let (fallback_from, fallback_reason) = fallback.map_or((None, None), |(s, r)| (Some(s), Some(r)));
    Ok((
        xs,
        SystemReport {
            index,
            solver,
            fallback_from,
            fallback_reason,
            iterations,
            residuals,
        },
    ))
}

/// Solves `R_k [h_k1 … h_kM] = [x_k1 … x_kM]` for every reference.
pub fn compute_filters_sdr(
    corr: &CorrelationSet,
    cfg: &EvalConfig,
) -> Result<(DistortionFilters, Vec<SystemReport>)> {
    let (k_refs, m_ests, taps) = (corr.num_refs(), corr.num_ests(), corr.taps());
    let opts = cgd_options(cfg);
    let per_ref: Vec<(Vec<Vec<f64>>, SystemReport)> = (0..k_refs)
        .into_par_iter()
        .map(|k| {
            let column = corr.toeplitz_column(k).to_vec();
            let raw = SymmetricToeplitz::new(column)?;
            let loaded = raw.with_loading(base_loading(raw.column()[0], taps));
            let rhs: Vec<Vec<f64>> = (0..m_ests).map(|m| corr.xcorr(k, m).to_vec()).collect();
            let attempt = || -> Attempt {
                match cfg.solver {
                    Solver::Direct => None,
                    Solver::Cgd => Some((|| {
                        let pre = CirculantPreconditioner::new(&loaded)?;
                        let out = cgd_solve_many(&loaded, &pre, &rhs, None, &opts)?;
                        Ok(out.into_iter().map(|o| (o.solution, o.iterations)).unzip())
                    })()),
                    Solver::Levinson => Some(
                        levinson_solve(&loaded, &rhs).map(|xs| (xs, vec![0; rhs.len()])),
                    ),
                }
            };
            solve_with_fallback(
                k,
                cfg.solver,
                attempt,
                || direct_solve(&raw, &rhs),
                &loaded,
                &rhs,
                cfg.precision,
            )
            .map_err(|e| e.at(Stage::SdrFilters, k))
        })
        .collect::<Result<_>>()?;

    let mut h = vec![Vec::new(); k_refs * m_ests];
    let mut reports = Vec::with_capacity(k_refs);
    for (k, (xs, report)) in per_ref.into_iter().enumerate() {
        for (m, x) in xs.into_iter().enumerate() {
            h[k * m_ests + m] = x;
        }
        reports.push(report);
    }
    Ok((
        DistortionFilters {
            num_refs: k_refs,
            num_ests: m_ests,
            taps,
            h,
            g: None,
        },
        reports,
    ))
}

/// Solves `R [g_1m; …; g_Km] = z_m` for every estimate, warm-starting CGD
/// from the stacked per-source filters when `warm` is given.
///
/// The returned filters carry both `h` (from `warm`, or empty) and `g`.
pub fn compute_filters_sir(
    corr: &CorrelationSet,
    warm: Option<&DistortionFilters>,
    cfg: &EvalConfig,
) -> Result<(DistortionFilters, Vec<SystemReport>)> {
    let (k_refs, m_ests, taps) = (corr.num_refs(), corr.num_ests(), corr.taps());
    if !corr.has_cross_blocks() {
        return Err(Error::InvalidConfig(
            "joint filters need the cross-reference correlations".into(),
        )
        .at(Stage::SirFilters, 0));
    }
    let lags: Vec<Vec<f64>> = (0..k_refs * k_refs)
        .map(|i| corr.acf(i / k_refs, i % k_refs).expect("checked above").to_vec())
        .collect();
    let raw = BlockToeplitz::new(k_refs, taps, lags)?;
    let loading: Vec<f64> = raw
        .diagonal_lag0()
        .iter()
        .map(|&r0| base_loading(r0, taps))
        .collect();
    let loaded = raw.with_loading(&loading);
    let rhs: Vec<Vec<f64>> = (0..m_ests).map(|m| corr.stacked_xcorr(m)).collect();
    let init: Option<Vec<Vec<f64>>> = warm.map(|w| (0..m_ests).map(|m| w.stacked_h(m)).collect());
    let opts = cgd_options(cfg);

    let attempt = || -> Attempt {
        match cfg.solver {
            Solver::Cgd => Some((|| {
                let pre = BlockCirculantPreconditioner::new(&loaded)?;
                let out = cgd_solve_many(&loaded, &pre, &rhs, init.as_deref(), &opts)?;
                Ok(out.into_iter().map(|o| (o.solution, o.iterations)).unzip())
            })()),
            // Levinson has no block counterpart here; the joint system goes direct.
            Solver::Direct | Solver::Levinson => None,
        }
    };
    let (xs, report) = solve_with_fallback(
        0,
        cfg.solver,
        attempt,
        || direct_solve(&raw, &rhs),
        &loaded,
        &rhs,
        cfg.precision,
    )
    .map_err(|e| e.at(Stage::SirFilters, 0))?;

    // Split the joint report into one per estimate.
    let reports = (0..m_ests)
        .map(|m| SystemReport {
            index: m,
            solver: report.solver,
            fallback_from: report.fallback_from,
            fallback_reason: report.fallback_reason.clone(),
            iterations: vec![report.iterations[m]],
            residuals: vec![report.residuals[m]],
        })
        .collect();

    let mut g = vec![Vec::new(); k_refs * m_ests];
    for (m, x) in xs.into_iter().enumerate() {
        for (k, seg) in x.chunks_exact(taps).enumerate() {
            g[k * m_ests + m] = seg.to_vec();
        }
    }
    let h = warm.map_or_else(|| vec![Vec::new(); k_refs * m_ests], |w| w.h.clone());
    Ok((
        DistortionFilters {
            num_refs: k_refs,
            num_ests: m_ests,
            taps,
            h,
            g: Some(g),
        },
        reports,
    ))
}

/// `c_km = ⟨x_km, h_km⟩` and `d_m = Σ_k ⟨x_km, g_km⟩`.
pub fn cosine_metrics(corr: &CorrelationSet, filters: &DistortionFilters) -> CosineMetrics {
    let (k_refs, m_ests) = (corr.num_refs(), corr.num_ests());
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let c = (0..k_refs * m_ests)
        .map(|i| {
            let (k, m) = (i / m_ests, i % m_ests);
            let h = filters.h(k, m);
            if h.is_empty() {
                f64::NAN
            } else {
                dot(corr.xcorr(k, m), h)
            }
        })
        .collect();
    let d = filters.g.as_ref().map(|_| {
        (0..m_ests)
            .map(|m| {
                (0..k_refs)
                    .map(|k| dot(corr.xcorr(k, m), filters.g(k, m).expect("joint filters present")))
                    .sum()
            })
            .collect()
    });
    CosineMetrics {
        num_refs: k_refs,
        num_ests: m_ests,
        c,
        d,
    }
}

/// SDR matrix (always computed), SIR matrix and SAR vector, in dB.
type DecibelTables = (Vec<Vec<f64>>, Option<Vec<Vec<f64>>>, Option<Vec<f64>>);

/// Clamps the cosine metrics and maps them to decibels.
fn to_decibels(
    cos: &CosineMetrics,
    metrics: MetricSet,
    eps: f64,
    events: &mut Vec<ClampEvent>,
) -> DecibelTables {
    let (k_refs, m_ests) = (cos.num_refs, cos.num_ests);
    let mut clamp = |quantity, reference, estimate, raw: f64| -> f64 {
        let (v, moved) = clamp_unit(raw, eps);
        if moved {
            events.push(ClampEvent {
                quantity,
                reference,
                estimate,
                raw,
                clamped: v,
                negative: raw < 0.0,
            });
        }
        v
    };
    let mut sdr = vec![vec![0.0; m_ests]; k_refs];
    let mut c_clamped = vec![vec![0.0; m_ests]; k_refs];
    for k in 0..k_refs {
        for m in 0..m_ests {
            let c = clamp(ClampedQuantity::C, Some(k), m, cos.c(k, m));
            c_clamped[k][m] = c;
            sdr[k][m] = db_map(c);
        }
    }
    let d_clamped: Option<Vec<f64>> = cos.d.as_ref().map(|d| {
        d.iter()
            .enumerate()
            .map(|(m, &v)| clamp(ClampedQuantity::D, None, m, v))
            .collect()
    });
    let sir = match (&cos.d, metrics.sir) {
        (Some(d), true) => Some(
            (0..k_refs)
                .map(|k| {
                    (0..m_ests)
                        .map(|m| {
                            let raw = if d[m] > 0.0 { cos.c(k, m) / d[m] } else { 0.0 };
                            db_map(clamp(ClampedQuantity::COverD, Some(k), m, raw))
                        })
                        .collect()
                })
                .collect(),
        ),
        _ => None,
    };
    let sar = match (d_clamped, metrics.sar) {
        (Some(d), true) => Some(d.into_iter().map(db_map).collect()),
        _ => None,
    };
    (sdr, sir, sar)
}

/// Full evaluation: normalize, correlate, solve, map to dB and optionally
/// resolve the reference→estimate permutation.
pub fn bss_eval(
    references: &MultichannelSignal,
    estimates: &MultichannelSignal,
    cfg: &EvalConfig,
) -> Result<BssEvalResult> {
    cfg.validate().map_err(|e| e.at(Stage::Validate, 0))?;
    validate_pairing(references, estimates, cfg.filter_length)
        .map_err(|e| e.at(Stage::Validate, 0))?;

    let (refs, ests) = match cfg.precision {
        Precision::Single => (references.quantized_f32(), estimates.quantized_f32()),
        Precision::Double => (references.clone(), estimates.clone()),
    };
    let refs = normalize_unit_norm(&refs).map_err(|e| e.at(Stage::Normalize, 0))?;
    let ests = normalize_unit_norm(&ests).map_err(|e| e.at(Stage::Normalize, 1))?;

    let needs_block = cfg.metrics.needs_block_system();
    let corr = compute_correlations_with(
        &refs,
        &ests,
        cfg.filter_length,
        CorrelationOptions {
            cross_blocks: needs_block,
            precision: cfg.precision,
        },
    )
    .map_err(|e| e.at(Stage::Correlate, 0))?;

    let (h_filters, sdr_systems) = compute_filters_sdr(&corr, cfg)?;
    let (filters, sir_systems) = if needs_block {
        compute_filters_sir(&corr, Some(&h_filters), cfg)?
    } else {
        (h_filters, Vec::new())
    };

    let cos = cosine_metrics(&corr, &filters);
    let mut clamp_events = Vec::new();
    let (sdr_all, sir, sar) = to_decibels(&cos, cfg.metrics, cfg.epsilon(), &mut clamp_events);

    let permutation = if cfg.resolve_permutation {
        let profits = sir.as_ref().unwrap_or(&sdr_all);
        let matrix = ProfitMatrix::from_rows(profits).map_err(|e| e.at(Stage::Assignment, 0))?;
        Some(solve_assignment(&matrix).mapping)
    } else {
        None
    };

    let toeplitz_solves = sdr_systems.iter().map(|r| r.residuals.len()).sum();
    let block_solves = sir_systems.iter().map(|r| r.residuals.len()).sum();
    Ok(BssEvalResult {
        num_refs: refs.num_channels(),
        num_ests: ests.num_channels(),
        sdr: cfg.metrics.sdr.then_some(sdr_all),
        sir,
        sar,
        permutation,
        cosine: cos,
        diagnostics: Diagnostics {
            solver: cfg.solver,
            sdr_systems,
            sir_systems,
            toeplitz_solves,
            block_solves,
            clamp_events,
        },
    })
}

/// Scale-invariant SDR: `bss_eval` with a single-tap distortion filter.
pub fn si_sdr(
    references: &MultichannelSignal,
    estimates: &MultichannelSignal,
    cfg: &EvalConfig,
) -> Result<BssEvalResult> {
    let cfg = EvalConfig {
        filter_length: 1,
        ..cfg.clone()
    };
    bss_eval(references, estimates, &cfg)
}
