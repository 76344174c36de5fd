//! Seeded synthetic signals for tests, the benchmark and the self-test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::signal::MultichannelSignal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent white Gaussian channels.
pub fn white(rng: &mut impl Rng, channels: usize, len: usize, sample_rate: u32) -> MultichannelSignal {
    let chans = (0..channels)
        .map(|_| (0..len).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    MultichannelSignal::new(chans, sample_rate).expect("non-empty")
}

/// Independent AR(1) channels `x[t] = coeff·x[t-1] + w[t]`, a crude stand-in
/// for the low-pass spectrum of speech.
pub fn ar1(
    rng: &mut impl Rng,
    channels: usize,
    len: usize,
    coeff: f64,
    sample_rate: u32,
) -> MultichannelSignal {
    let chans = (0..channels)
        .map(|_| {
            let mut prev = 0.0;
            (0..len)
                .map(|_| {
                    let w: f64 = rng.sample(StandardNormal);
                    prev = coeff * prev + w;
                    prev
                })
                .collect()
        })
        .collect();
    MultichannelSignal::new(chans, sample_rate).expect("non-empty")
}
