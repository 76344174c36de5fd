//! Multichannel waveforms and the input checks shared by every stage.

use crate::error::{Error, Result};

/// A real multichannel waveform, stored channel-major.
///
/// The sample rate is carried for reporting only; none of the metrics
/// depend on it.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSignal {
    data: Vec<f64>,
    channels: usize,
    len: usize,
    sample_rate: u32,
}

impl MultichannelSignal {
    /// Builds a signal from one vector per channel.
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        let num_channels = channels.len();
        let len = channels.first().map_or(0, Vec::len);
        if num_channels == 0 || len == 0 {
            return Err(Error::EmptyInput);
        }
        if let Some(bad) = channels.iter().find(|c| c.len() != len) {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: bad.len(),
            });
        }
        let data = channels.into_iter().flatten().collect();
        Self::from_channel_major(data, num_channels, sample_rate)
    }

    /// Builds a signal from a flat channel-major buffer (`channels × len`).
    pub fn from_channel_major(data: Vec<f64>, channels: usize, sample_rate: u32) -> Result<Self> {
        if channels == 0 || data.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !data.len().is_multiple_of(channels) {
            return Err(Error::DimensionMismatch {
                expected: channels * (data.len() / channels + 1),
                actual: data.len(),
            });
        }
        let len = data.len() / channels;
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                channel: pos / len,
                index: pos % len,
            });
        }
        Ok(Self {
            data,
            channels,
            len,
            sample_rate,
        })
    }

    /// Builds a signal from interleaved frames, as stored in audio files.
    pub fn from_interleaved(frames: &[f64], channels: usize, sample_rate: u32) -> Result<Self> {
        if channels == 0 || frames.is_empty() {
            return Err(Error::EmptyInput);
        }
        let len = frames.len() / channels;
        let mut data = vec![0.0; channels * len];
        for (t, frame) in frames.chunks_exact(channels).enumerate() {
            for (c, &x) in frame.iter().enumerate() {
                data[c * len + t] = x;
            }
        }
        Self::from_channel_major(data, channels, sample_rate)
    }

    pub fn num_channels(&self) -> usize {
        self.channels
    }

    /// Number of samples per channel.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn channels(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.len)
    }

    pub fn as_channel_major(&self) -> &[f64] {
        &self.data
    }

    /// Rounds every sample through `f32`.
    pub(crate) fn quantized_f32(&self) -> Self {
        Self {
            data: self.data.iter().map(|&x| x as f32 as f64).collect(),
            ..self.clone()
        }
    }

    /// Reorders channels; `order[i]` is the source channel of output channel `i`.
    pub fn select_channels(&self, order: &[usize]) -> Result<Self> {
        let chans = order
            .iter()
            .map(|&c| {
                if c < self.channels {
                    Ok(self.channel(c).to_vec())
                } else {
                    Err(Error::DimensionMismatch {
                        expected: self.channels,
                        actual: c + 1,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(chans, self.sample_rate)
    }
}

/// Scales every channel to unit Euclidean norm.
pub fn normalize_unit_norm(signal: &MultichannelSignal) -> Result<MultichannelSignal> {
    let mut data = signal.data.clone();
    for (c, chan) in data.chunks_exact_mut(signal.len).enumerate() {
        let norm = norm2(chan);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroSignal { channel: c });
        }
        chan.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(MultichannelSignal {
        data,
        channels: signal.channels,
        len: signal.len,
        sample_rate: signal.sample_rate,
    })
}

/// Norm with scaling so that very large or tiny samples do not overflow.
pub(crate) fn norm2(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * sum.sqrt()
}

/// Checks that a reference/estimate pair can be evaluated with `filter_length` taps.
pub fn validate_pairing(
    references: &MultichannelSignal,
    estimates: &MultichannelSignal,
    filter_length: usize,
) -> Result<()> {
    if references.num_channels() == 0
        || estimates.num_channels() == 0
        || references.is_empty()
        || estimates.is_empty()
    {
        return Err(Error::EmptyInput);
    }
    if references.len() != estimates.len() {
        return Err(Error::LengthMismatch {
            references: references.len(),
            estimates: estimates.len(),
        });
    }
    if filter_length == 0 {
        return Err(Error::InvalidConfig("filter length must be at least 1".into()));
    }
    if filter_length >= references.len() {
        return Err(Error::FilterTooLong {
            filter_length,
            samples: references.len(),
        });
    }
    Ok(())
}
