//! Fast bss_eval metrics.
//!
//! SDR, SIR and SAR are computed from cosine metrics of the distortion
//! filters instead of explicit signal decompositions, and the Toeplitz and
//! block-Toeplitz filter systems are solved with circulant-preconditioned
//! conjugate gradient (or directly, or by Levinson recursion).
//!
//! ```no_run
//! use fastsdr::{bss_eval, EvalConfig, MultichannelSignal};
//!
//! # fn main() -> fastsdr::Result<()> {
//! let refs = MultichannelSignal::new(vec![vec![0.0; 16_000]; 2], 16_000)?;
//! let ests = refs.clone();
//! let result = bss_eval(&refs, &ests, &EvalConfig::default())?;
//! println!("{:?}", result.sdr);
//! # Ok(())
//! # }
//! ```

pub mod assignment;
pub mod bench;
pub mod config;
pub mod correlator;
pub mod error;
mod fft;
pub mod metrics;
pub mod oracle;
pub mod report;
pub mod selftest;
pub mod signal;
pub mod solvers;
pub mod synth;
pub mod wav;

pub use assignment::{solve_assignment, Assignment, ProfitMatrix};
pub use config::{EvalConfig, MetricSet, Precision, Solver};
pub use correlator::{compute_correlations, CorrelationSet};
pub use error::{Error, Result, Stage};
pub use metrics::{bss_eval, cosine_metrics, db_map, si_sdr, BssEvalResult, CosineMetrics, Diagnostics};
pub use signal::{normalize_unit_norm, validate_pairing, MultichannelSignal};
