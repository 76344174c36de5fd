//! Install verification: fast path against the explicit-projection oracle,
//! and circulant preconditioner round trips.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{EvalConfig, Solver};
use crate::error::Result;
use crate::metrics::bss_eval;
use crate::oracle::{generate_mixture, oracle_bss_eval, MixtureSpec};
use crate::signal::MultichannelSignal;
use crate::solvers::{BlockCirculantPreconditioner, BlockToeplitz, CirculantPreconditioner, SymmetricToeplitz};
use crate::synth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestOptions {
    pub instances: usize,
    pub seed: u64,
    /// Largest accepted |fast − oracle| in dB.
    pub equivalence_tol_db: f64,
    /// Largest accepted relative error of `C⁻¹ C v`.
    pub roundtrip_tol: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            instances: 200,
            seed: 0,
            equivalence_tol_db: 1e-8,
            roundtrip_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<28} instances={:<4} max_deviation={:.3e} tolerance={:.1e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.instances,
                c.max_deviation,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

/// One random equivalence instance: `K = M ∈ {1,2,3}`, `T ∈ [32,128]`,
/// `L ∈ [2,16]`, drawn so that the stacked shift matrix keeps full column
/// rank by a wide margin (`K·L ≤ (T+L−1)/2`).
pub fn equivalence_instance(rng: &mut impl Rng) -> (MultichannelSignal, MultichannelSignal, usize) {
    loop {
        let k = rng.gen_range(1..=3);
        let t = rng.gen_range(32..=128);
        let l = rng.gen_range(2..=16);
        if 2 * k * l > t + l - 1 {
            continue;
        }
        let refs = synth::white(rng, k, t, 8000);
        let noise = rng.gen_range(0.01..1.0);
        let mix_taps = rng.gen_range(1..=l);
        let spec = MixtureSpec::random(rng, k, k, mix_taps, noise);
        let seed = rng.gen();
        let ests = generate_mixture(&refs, &spec, seed).expect("shapes match");
        return (refs, ests, l);
    }
}

/// Largest |fast − oracle| over SDR, SIR and SAR for one instance, direct solver.
pub fn equivalence_deviation(refs: &MultichannelSignal, ests: &MultichannelSignal, taps: usize) -> Result<f64> {
    let cfg = EvalConfig::default()
        .with_filter_length(taps)
        .with_solver(Solver::Direct);
    let fast = bss_eval(refs, ests, &cfg)?;
    let slow = oracle_bss_eval(refs, ests, taps, cfg.epsilon())?;
    let (sdr, sir, sar) = (
        fast.sdr.expect("requested"),
        fast.sir.expect("requested"),
        fast.sar.expect("requested"),
    );
    let mut worst = 0.0f64;
    for (k, row) in slow.iter().enumerate() {
        for (m, o) in row.iter().enumerate() {
            worst = worst
                .max((sdr[k][m] - o.sdr).abs())
                .max((sir[k][m] - o.sir).abs())
                .max((sar[m] - o.sar).abs());
        }
    }
    Ok(worst)
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

fn ar1_lags(rng: &mut impl Rng, channels: usize, taps: usize) -> Vec<Vec<f64>> {
    let sig = synth::ar1(rng, channels, 8 * taps, 0.9, 8000);
    let mut lags = Vec::with_capacity(channels * channels);
    for a in sig.channels() {
        for b in sig.channels() {
            lags.push(
                (-(taps as isize - 1)..taps as isize)
                    .map(|lag| {
                        (0..a.len())
                            .filter_map(|u| {
                                let v = u as isize + lag;
                                (v >= 0 && (v as usize) < b.len()).then(|| a[u] * b[v as usize])
                            })
                            .sum()
                    })
                    .collect(),
            );
        }
    }
    lags
}

pub fn run_selftest(opts: &SelftestOptions) -> Result<SelftestReport> {
    let mut rng = synth::rng(opts.seed);
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..opts.instances {
        let (refs, ests, taps) = equivalence_instance(&mut rng);
        worst = worst.max(equivalence_deviation(&refs, &ests, taps)?);
    }
    checks.push(CheckResult {
        name: "cosine-vs-projection".into(),
        instances: opts.instances,
        max_deviation: worst,
        tolerance: opts.equivalence_tol_db,
        passed: worst <= opts.equivalence_tol_db,
    });

    let rounds = opts.instances.clamp(1, 50);
    let (mut scalar, mut block) = (0.0f64, 0.0f64);
    for _ in 0..rounds {
        let taps = rng.gen_range(4..=64);
        let k = rng.gen_range(1..=3);
        let lags = ar1_lags(&mut rng, k, taps);
        let v: Vec<f64> = (0..k * taps).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let op = SymmetricToeplitz::new(lags[0][taps - 1..].to_vec())?;
        let pre = CirculantPreconditioner::new(&op)?;
        scalar = scalar.max(relative_error(&pre.apply_inverse(&pre.apply(&v[..taps])), &v[..taps]));

        let bop = BlockToeplitz::new(k, taps, lags)?;
        let bpre = BlockCirculantPreconditioner::new(&bop)?;
        block = block.max(relative_error(&bpre.apply_inverse(&bpre.apply(&v)), &v));
    }
    for (name, dev) in [("circulant-roundtrip", scalar), ("block-circulant-roundtrip", block)] {
        checks.push(CheckResult {
            name: name.into(),
            instances: rounds,
            max_deviation: dev,
            tolerance: opts.roundtrip_tol,
            passed: dev <= opts.roundtrip_tol,
        });
    }
    Ok(SelftestReport { checks })
}
