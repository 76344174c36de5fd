//! Regenerates `tests/fixtures`: a two-source convolutive mixture written as
//! 64-bit float WAVs, and the projection-oracle metrics for it.
//!
//! ```text
//! cargo run -p fastsdr --example make_fixture
//! ```

use std::fs;
use std::path::Path;

use fastsdr::oracle::{generate_mixture, oracle_bss_eval, MixtureSpec};
use fastsdr::synth;
use fastsdr::wav::{write_wav, SampleFormat};
use serde_json::json;

const SEED: u64 = 20_240_901;
const SAMPLES: usize = 4000;
const TAPS: usize = 64;

fn main() -> fastsdr::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    fs::create_dir_all(&dir)?;
    let mut rng = synth::rng(SEED);
    let refs = synth::ar1(&mut rng, 2, SAMPLES, 0.9, 8000);
    let spec = MixtureSpec::random(&mut rng, 2, 2, 8, 0.2);
    let ests = generate_mixture(&refs, &spec, SEED + 1)?;
    write_wav(dir.join("reference.wav"), &refs, SampleFormat::Float(64))?;
    write_wav(dir.join("estimate.wav"), &ests, SampleFormat::Float(64))?;

    let metrics = oracle_bss_eval(&refs, &ests, TAPS, 1e-12)?;
    let sdr: Vec<Vec<f64>> = metrics.iter().map(|r| r.iter().map(|m| m.sdr).collect()).collect();
    let sir: Vec<Vec<f64>> = metrics.iter().map(|r| r.iter().map(|m| m.sir).collect()).collect();
    let sar: Vec<f64> = metrics[0].iter().map(|m| m.sar).collect();
    let doc = json!({
        "seed": SEED,
        "filter_length": TAPS,
        "sdr": sdr,
        "sir": sir,
        "sar": sar,
    });
    fs::write(dir.join("expected.json"), serde_json::to_string_pretty(&doc).unwrap() + "\n")?;
    Ok(())
}
