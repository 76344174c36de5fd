//! JSON and CSV result documents.
//!
//! Floats are written in their shortest round-trip form, so parsing a
//! document gives back exactly the emitted values. Field order is fixed,
//! which makes the output byte-identical for identical results.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::metrics::{AlignedMetrics, BssEvalResult, CosineMetrics, Diagnostics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub references: usize,
    pub estimates: usize,
    pub samples: usize,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsSection {
    /// `[reference][estimate]`, dB.
    pub sdr: Option<Vec<Vec<f64>>>,
    pub sir: Option<Vec<Vec<f64>>>,
    /// Per estimate, dB.
    pub sar: Option<Vec<f64>>,
    /// Estimate assigned to each reference.
    pub permutation: Option<Vec<Option<usize>>>,
    pub aligned: Vec<AlignedMetrics>,
    pub cosine: CosineMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: EvalConfig,
    pub input: InputSummary,
    pub results: ResultsSection,
    pub diagnostics: Diagnostics,
}

impl Report {
    pub fn new(config: &EvalConfig, input: InputSummary, result: &BssEvalResult) -> Self {
        Self {
            config: config.clone(),
            input,
            results: ResultsSection {
                sdr: result.sdr.clone(),
                sir: result.sir.clone(),
                sar: result.sar.clone(),
                permutation: result.permutation.clone(),
                aligned: result.aligned(),
                cosine: result.cosine.clone(),
            },
            diagnostics: result.diagnostics.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is always serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("malformed report: {e}")))
    }

    /// `role,reference,estimate,sdr,sir,sar`: one `pair` row per
    /// (reference, estimate), then one `assignment` row per reference.
    pub fn to_csv(&self) -> String {
        let r = &self.results;
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("role,reference,estimate,sdr,sir,sar\n");
        for k in 0..self.input.references {
            for m in 0..self.input.estimates {
                let _ = writeln!(
                    out,
                    "pair,{k},{m},{},{},{}",
                    cell(r.sdr.as_ref().map(|s| s[k][m])),
                    cell(r.sir.as_ref().map(|s| s[k][m])),
                    cell(r.sar.as_ref().map(|s| s[m])),
                );
            }
        }
        if let Some(perm) = &r.permutation {
            for (k, m) in perm.iter().enumerate() {
                let Some(m) = m else {
                    let _ = writeln!(out, "assignment,{k},,,,");
                    continue;
                };
                let _ = writeln!(
                    out,
                    "assignment,{k},{m},{},{},{}",
                    cell(r.sdr.as_ref().map(|s| s[k][*m])),
                    cell(r.sir.as_ref().map(|s| s[k][*m])),
                    cell(r.sar.as_ref().map(|s| s[*m])),
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{generate_mixture, MixtureSpec};
    use crate::{bss_eval, synth};

    fn report() -> Report {
        let mut rng = synth::rng(8);
        let refs = synth::white(&mut rng, 2, 600, 8000);
        let spec = MixtureSpec::random(&mut rng, 2, 2, 3, 0.3);
        let ests = generate_mixture(&refs, &spec, 1).unwrap();
        let cfg = EvalConfig::default().with_filter_length(8);
        let res = bss_eval(&refs, &ests, &cfg).unwrap();
        let input = InputSummary {
            references: 2,
            estimates: 2,
            samples: 600,
            sample_rate: 8000,
        };
        Report::new(&cfg, input, &res)
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = report();
        let text = r.to_json();
        let back = Report::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn json_top_level_layout() {
        let v: serde_json::Value = serde_json::from_str(&report().to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for key in ["config", "results", "diagnostics"] {
            assert!(keys.contains(&key));
        }
        assert_eq!(v["results"]["sdr"].as_array().unwrap().len(), 2);
        assert_eq!(v["config"]["solver"], "cgd");
    }

    #[test]
    fn csv_rows() {
        let r = report();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "role,reference,estimate,sdr,sir,sar");
        assert_eq!(lines.len(), 1 + 4 + 2);
        assert!(lines[1].starts_with("pair,0,0,"));
        assert!(lines[5].starts_with("assignment,0,"));
        let sdr01: f64 = lines[2].split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(sdr01, r.results.sdr.as_ref().unwrap()[0][1]);
    }

    #[test]
    fn csv_leaves_missing_metrics_empty() {
        let mut r = report();
        r.results.sir = None;
        r.results.sar = None;
        let csv = r.to_csv();
        assert!(csv.lines().nth(1).unwrap().ends_with(",,"));
    }
}
