//! Minimal RIFF/WAVE reading and writing.
//!
//! Integer PCM (8, 16, 24, 32 bit) and IEEE float (32, 64 bit) are
//! supported, including `WAVE_FORMAT_EXTENSIBLE` headers. Samples are
//! returned as `f64` in `[-1, 1)` for integer data.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::MultichannelSignal;

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Int(u16),
    Float(u16),
}

impl SampleFormat {
    fn bits(self) -> u16 {
        match self {
            SampleFormat::Int(b) | SampleFormat::Float(b) => b,
        }
    }

    fn code(self) -> u16 {
        match self {
            SampleFormat::Int(_) => FORMAT_PCM,
            SampleFormat::Float(_) => FORMAT_FLOAT,
        }
    }

    fn check(self) -> Result<Self> {
        match self {
            SampleFormat::Int(8 | 16 | 24 | 32) | SampleFormat::Float(32 | 64) => Ok(self),
            other => Err(Error::Wav(format!("unsupported sample format {other:?}"))),
        }
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a WAVE file held in memory. Returns the signal and its sample format.
pub fn decode(bytes: &[u8]) -> Result<(MultichannelSignal, SampleFormat)> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Wav("not a RIFF/WAVE file".into()));
    }
    let mut pos = 12;
    let mut fmt: Option<(SampleFormat, usize, u32)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::Wav("fmt chunk too short".into()));
                }
                let mut code = u16_at(body, 0);
                let channels = u16_at(body, 2) as usize;
                let rate = u32_at(body, 4);
                let bits = u16_at(body, 14);
                if code == FORMAT_EXTENSIBLE {
                    if body.len() < 26 {
                        return Err(Error::Wav("extensible fmt chunk too short".into()));
                    }
                    code = u16_at(body, 24);
                }
                let format = match code {
                    FORMAT_PCM => SampleFormat::Int(bits),
                    FORMAT_FLOAT => SampleFormat::Float(bits),
                    other => return Err(Error::Wav(format!("unsupported format code {other:#x}"))),
                }
                .check()?;
                if channels == 0 {
                    return Err(Error::Wav("zero channels".into()));
                }
                fmt = Some((format, channels, rate));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are padded to even length.
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    let (format, channels, rate) = fmt.ok_or_else(|| Error::Wav("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Wav("missing data chunk".into()))?;
    let width = format.bits() as usize / 8;
    let frame = width * channels;
    let frames = data.len() / frame;
    let samples: Vec<f64> = data[..frames * frame]
        .chunks_exact(width)
        .map(|s| decode_sample(s, format))
        .collect();
    let signal = MultichannelSignal::from_interleaved(&samples, channels, rate)?;
    Ok((signal, format))
}

fn decode_sample(s: &[u8], format: SampleFormat) -> f64 {
    match format {
        SampleFormat::Int(8) => (s[0] as f64 - 128.0) / 128.0,
        SampleFormat::Int(16) => i16::from_le_bytes([s[0], s[1]]) as f64 / 32_768.0,
        SampleFormat::Int(24) => {
            let v = i32::from_le_bytes([0, s[0], s[1], s[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        SampleFormat::Int(32) => i32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64 / 2_147_483_648.0,
        SampleFormat::Float(32) => f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64,
        SampleFormat::Float(64) => f64::from_le_bytes(s.try_into().expect("8 bytes")),
        _ => unreachable!("checked when parsing the header"),
    }
}

fn encode_sample(x: f64, format: SampleFormat, out: &mut Vec<u8>) {
    let quant = |scale: f64, lo: f64, hi: f64| (x * scale).round().clamp(lo, hi);
    match format {
        SampleFormat::Int(8) => out.push((quant(128.0, -128.0, 127.0) + 128.0) as u8),
        SampleFormat::Int(16) => out.extend((quant(32_768.0, -32_768.0, 32_767.0) as i16).to_le_bytes()),
        SampleFormat::Int(24) => {
            let v = quant(8_388_608.0, -8_388_608.0, 8_388_607.0) as i32;
            out.extend(&v.to_le_bytes()[..3]);
        }
        SampleFormat::Int(32) => {
            out.extend((quant(2_147_483_648.0, -2_147_483_648.0, 2_147_483_647.0) as i32).to_le_bytes())
        }
        SampleFormat::Float(32) => out.extend((x as f32).to_le_bytes()),
        SampleFormat::Float(64) => out.extend(x.to_le_bytes()),
        _ => unreachable!("checked by the caller"),
    }
}

/// Serializes a signal as a canonical 44-byte-header WAVE file.
pub fn encode(signal: &MultichannelSignal, format: SampleFormat) -> Result<Vec<u8>> {
    let format = format.check()?;
    let channels = signal.num_channels();
    let width = format.bits() as usize / 8;
    let data_len = signal.len() * channels * width;
    let channels16 = u16::try_from(channels).map_err(|_| Error::Wav("too many channels".into()))?;
    let riff_len = u32::try_from(36 + data_len).map_err(|_| Error::Wav("file exceeds 4 GiB".into()))?;

    let mut out = Vec::with_capacity(44 + data_len);
    out.extend(b"RIFF");
    out.extend(riff_len.to_le_bytes());
    out.extend(b"WAVEfmt ");
    out.extend(16u32.to_le_bytes());
    out.extend(format.code().to_le_bytes());
    out.extend(channels16.to_le_bytes());
    out.extend(signal.sample_rate().to_le_bytes());
    out.extend((signal.sample_rate() * (channels * width) as u32).to_le_bytes());
    out.extend(((channels * width) as u16).to_le_bytes());
    out.extend(format.bits().to_le_bytes());
    out.extend(b"data");
    out.extend((data_len as u32).to_le_bytes());
    for t in 0..signal.len() {
        for c in 0..channels {
            encode_sample(signal.channel(c)[t], format, &mut out);
        }
    }
    Ok(out)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<MultichannelSignal> {
    let path = path.as_ref();
    let bytes = fs::read(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    decode(&bytes)
        .map(|(s, _)| s)
        .map_err(|e| match e {
            Error::Wav(msg) => Error::Wav(format!("{}: {msg}", path.display())),
            other => other,
        })
}

pub fn write_wav(path: impl AsRef<Path>, signal: &MultichannelSignal, format: SampleFormat) -> Result<()> {
    let bytes = encode(signal, format)?;
    fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

/// Reads several files and stacks their channels, in order.
pub fn read_many<P: AsRef<Path>>(paths: &[P]) -> Result<MultichannelSignal> {
    let mut chans = Vec::new();
    let mut rate = None;
    for p in paths {
        let sig = read_wav(p)?;
        if let Some(r) = rate {
            if r != sig.sample_rate() {
                return Err(Error::SampleRateMismatch {
                    expected: r,
                    actual: sig.sample_rate(),
                });
            }
        }
        rate = Some(sig.sample_rate());
        chans.extend(sig.channels().map(<[f64]>::to_vec));
    }
    let rate = rate.ok_or(Error::EmptyInput)?;
    if let Some(len) = chans.first().map(Vec::len) {
        if let Some(bad) = chans.iter().find(|c| c.len() != len) {
            return Err(Error::ChannelLengthMismatch {
                expected: len,
                actual: bad.len(),
            });
        }
    }
    MultichannelSignal::new(chans, rate)
}
