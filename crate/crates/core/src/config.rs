use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Filter length used when none is given.
pub const DEFAULT_FILTER_LENGTH: usize = 512;
/// Fixed iteration count of the CGD10 configuration.
pub const DEFAULT_CGD_ITERS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Direct,
    Cgd,
    Levinson,
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" | "solve" => Ok(Solver::Direct),
            "cgd" => Ok(Solver::Cgd),
            "levinson" => Ok(Solver::Levinson),
            other => Err(Error::InvalidConfig(format!("unknown solver '{other}'"))),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Direct => "direct",
            Solver::Cgd => "cgd",
            Solver::Levinson => "levinson",
        })
    }
}

/// Working precision. Single precision stores every intermediate vector
/// as `f32` while inner products still accumulate in `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Precision {
    #[serde(rename = "f32")]
    Single,
    #[default]
    #[serde(rename = "f64")]
    Double,
}

impl Precision {
    #[inline]
    pub fn store(self, x: f64) -> f64 {
        match self {
            Precision::Single => x as f32 as f64,
            Precision::Double => x,
        }
    }

    pub fn store_all(self, xs: &mut [f64]) {
        if self == Precision::Single {
            xs.iter_mut().for_each(|x| *x = *x as f32 as f64);
        }
    }

    pub fn default_clamp_epsilon(self) -> f64 {
        match self {
            Precision::Single => 1e-7,
            Precision::Double => 1e-12,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Single => "f32",
            Precision::Double => "f64",
        })
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f32" | "single" | "fp32" => Ok(Precision::Single),
            "f64" | "double" | "fp64" => Ok(Precision::Double),
            other => Err(Error::InvalidConfig(format!("unknown precision '{other}'"))),
        }
    }
}

/// Which of SDR, SIR and SAR to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSet {
    pub sdr: bool,
    pub sir: bool,
    pub sar: bool,
}

impl MetricSet {
    pub const ALL: MetricSet = MetricSet {
        sdr: true,
        sir: true,
        sar: true,
    };
    pub const SDR_ONLY: MetricSet = MetricSet {
        sdr: true,
        sir: false,
        sar: false,
    };

    /// Whether the joint block-Toeplitz system has to be solved.
    pub fn needs_block_system(&self) -> bool {
        self.sir || self.sar
    }

    pub fn is_empty(&self) -> bool {
        !(self.sdr || self.sir || self.sar)
    }
}

impl Default for MetricSet {
    fn default() -> Self {
        MetricSet::ALL
    }
}

impl FromStr for MetricSet {
    type Err = Error;

    /// Parses a comma separated list such as `sdr,sir`.
    fn from_str(s: &str) -> Result<Self> {
        let mut set = MetricSet {
            sdr: false,
            sir: false,
            sar: false,
        };
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name.to_ascii_lowercase().as_str() {
                "sdr" => set.sdr = true,
                "sir" => set.sir = true,
                "sar" => set.sar = true,
                "all" => set = MetricSet::ALL,
                other => return Err(Error::InvalidConfig(format!("unknown metric '{other}'"))),
            }
        }
        if set.is_empty() {
            return Err(Error::InvalidConfig("no metric requested".into()));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub filter_length: usize,
    pub solver: Solver,
    pub cgd_iters: usize,
    /// Relative residual threshold; zero means fixed-iteration mode.
    pub cgd_tol: f64,
    pub precision: Precision,
    pub metrics: MetricSet,
    pub resolve_permutation: bool,
    /// Clamp for cosine metrics; `None` selects the precision default.
    pub clamp_epsilon: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            filter_length: DEFAULT_FILTER_LENGTH,
            solver: Solver::Cgd,
            cgd_iters: DEFAULT_CGD_ITERS,
            cgd_tol: 0.0,
            precision: Precision::Double,
            metrics: MetricSet::ALL,
            resolve_permutation: true,
            clamp_epsilon: None,
        }
    }
}

impl EvalConfig {
    pub fn with_filter_length(mut self, filter_length: usize) -> Self {
        self.filter_length = filter_length;
        self
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_metrics(mut self, metrics: MetricSet) -> Self {
        self.metrics = metrics;
        self
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.clamp_epsilon
            .unwrap_or_else(|| self.precision.default_clamp_epsilon())
    }

    pub fn validate(&self) -> Result<()> {
        if self.filter_length == 0 {
            return Err(Error::InvalidConfig("filter length must be at least 1".into()));
        }
        if self.solver == Solver::Cgd && self.cgd_iters == 0 {
            return Err(Error::InvalidConfig("cgd_iters must be at least 1".into()));
        }
        if !(self.cgd_tol >= 0.0 && self.cgd_tol.is_finite()) {
            return Err(Error::InvalidConfig("cgd_tol must be a nonnegative number".into()));
        }
        let eps = self.epsilon();
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "clamp epsilon {eps} must lie in (0, 0.5)"
            )));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidConfig("no metric requested".into()));
        }
        Ok(())
    }
}
