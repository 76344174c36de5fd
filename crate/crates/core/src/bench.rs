//! Runtime benchmark over a grid of channel counts, signal durations,
//! filter lengths and solvers.
//!
//! Each grid cell times a batch of evaluations of synthetic speech-like
//! mixtures. One warm-up batch is run and discarded, then `reps` batches
//! are timed with a monotonic clock.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{EvalConfig, MetricSet, Solver};
use crate::error::Result;
use crate::metrics::bss_eval;
use crate::oracle::{generate_mixture, MixtureSpec};
use crate::signal::MultichannelSignal;
use crate::synth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchGrid {
    pub channels: Vec<usize>,
    pub seconds: Vec<f64>,
    pub filter_lengths: Vec<usize>,
    pub solvers: Vec<Solver>,
    pub metrics: MetricSet,
    pub sample_rate: u32,
    pub reps: usize,
    pub batch: usize,
    pub cgd_iters: usize,
    pub seed: u64,
}

impl Default for BenchGrid {
    fn default() -> Self {
        Self {
            channels: vec![2],
            seconds: vec![5.0],
            filter_lengths: vec![512, 1024],
            solvers: vec![Solver::Cgd, Solver::Direct],
            metrics: MetricSet::ALL,
            sample_rate: 16_000,
            reps: 10,
            batch: 10,
            cgd_iters: crate::config::DEFAULT_CGD_ITERS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub channels: usize,
    pub seconds: f64,
    pub filter_length: usize,
    pub solver: Solver,
    /// Mean wall time of one batch, milliseconds.
    pub mean_ms: f64,
    pub std_ms: f64,
    pub reps: usize,
    pub batch: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn find(&self, channels: usize, filter_length: usize, solver: Solver) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.channels == channels && r.filter_length == filter_length && r.solver == solver)
    }

    /// Mean-time ratio between two filter lengths at fixed channels and solver.
    pub fn length_ratio(&self, channels: usize, solver: Solver, num: usize, den: usize) -> Option<f64> {
        Some(self.find(channels, num, solver)?.mean_ms / self.find(channels, den, solver)?.mean_ms)
    }
}

impl fmt::Display for BenchTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8} {:>8} {:>8} {:>10} {:>12} {:>10}",
            "channels", "seconds", "L", "solver", "mean [ms]", "std [ms]"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>8} {:>8} {:>8} {:>10} {:>12.2} {:>10.2}",
                r.channels,
                r.seconds,
                r.filter_length,
                r.solver.to_string(),
                r.mean_ms,
                r.std_ms
            )?;
        }
        Ok(())
    }
}

/// Speech-like reference/estimate pairs for one grid cell.
pub fn synthetic_batch(
    channels: usize,
    samples: usize,
    sample_rate: u32,
    batch: usize,
    seed: u64,
) -> Vec<(MultichannelSignal, MultichannelSignal)> {
    let mut rng = synth::rng(seed);
    (0..batch)
        .map(|i| {
            let refs = synth::ar1(&mut rng, channels, samples, 0.95, sample_rate);
            let spec = MixtureSpec::random(&mut rng, channels, channels, 16, 0.1);
            let ests = generate_mixture(&refs, &spec, seed.wrapping_add(i as u64)).expect("shapes match");
            (refs, ests)
        })
        .collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs every grid cell; `progress` is called after each finished row.
pub fn run_bench(grid: &BenchGrid, mut progress: impl FnMut(&BenchRow)) -> Result<BenchTable> {
    let mut rows = Vec::new();
    let reps = grid.reps.max(1);
    for &channels in &grid.channels {
        for &seconds in &grid.seconds {
            let samples = (seconds * grid.sample_rate as f64).round() as usize;
            let pairs = synthetic_batch(channels, samples, grid.sample_rate, grid.batch, grid.seed);
            for &filter_length in &grid.filter_lengths {
                for &solver in &grid.solvers {
                    let cfg = EvalConfig {
                        filter_length,
                        solver,
                        cgd_iters: grid.cgd_iters,
                        metrics: grid.metrics,
                        ..EvalConfig::default()
                    };
                    let run_batch = || -> Result<f64> {
                        let start = Instant::now();
                        for (r, e) in &pairs {
                            bss_eval(r, e, &cfg)?;
                        }
                        Ok(start.elapsed().as_secs_f64() * 1e3)
                    };
                    run_batch()?;
                    let times = (0..reps).map(|_| run_batch()).collect::<Result<Vec<_>>>()?;
                    let (mean_ms, std_ms) = mean_std(&times);
                    let row = BenchRow {
                        channels,
                        seconds,
                        filter_length,
                        solver,
                        mean_ms,
                        std_ms,
                        reps,
                        batch: grid.batch,
                    };
                    progress(&row);
                    rows.push(row);
                }
            }
        }
    }
    Ok(BenchTable { rows })
}

/// Least-squares slope of `log(time)` against `log(channels)`.
pub fn fit_exponent(points: &[(usize, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(k, t)| ((k as f64).ln(), t.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}
