//! Minimal RIFF/WAVE reader and writer.
//!
//! Exactly two encodings are supported, interleaved with any channel count:
//! 16-bit PCM (format tag 1) and 32-bit IEEE float (format tag 3). Unknown
//! chunks are skipped, unsupported encodings are rejected by name, and a
//! truncated file is a parse error rather than a partial signal.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::dsp::MultichannelSignal;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("wav parse error: {0}")]
    Parse(String),
    #[error("unsupported wav encoding: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

const TAG_PCM: u16 = 1;
const TAG_FLOAT: u16 = 3;
const TAG_EXTENSIBLE: u16 = 0xFFFE;

fn format_name(tag: u16) -> String {
    match tag {
        TAG_PCM => "pcm".to_string(),
        TAG_FLOAT => "ieee-float".to_string(),
        6 => "a-law".to_string(),
        7 => "mu-law".to_string(),
        TAG_EXTENSIBLE => "extensible".to_string(),
        other => format!("format tag {other}"),
    }
}

struct Fmt {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
    block_align: u16,
}

fn u16_at(bytes: &[u8], at: usize) -> Result<u16, WavError> {
    bytes
        .get(at..at + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| WavError::Parse("file truncated".into()))
}

fn u32_at(bytes: &[u8], at: usize) -> Result<u32, WavError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| WavError::Parse("file truncated".into()))
}

fn parse_fmt(chunk: &[u8]) -> Result<Fmt, WavError> {
    if chunk.len() < 16 {
        return Err(WavError::Parse("fmt chunk shorter than 16 bytes".into()));
    }
    let mut tag = u16_at(chunk, 0)?;
    let channels = u16_at(chunk, 2)?;
    let sample_rate = u32_at(chunk, 4)?;
    let block_align = u16_at(chunk, 12)?;
    let bits = u16_at(chunk, 14)?;
    if tag == TAG_EXTENSIBLE {
        // The real encoding sits in the first two bytes of the sub-format
        // GUID, after cbSize and the valid-bits/channel-mask fields.
        if chunk.len() < 26 {
            return Err(WavError::Parse("extensible fmt chunk truncated".into()));
        }
        tag = u16_at(chunk, 24)?;
    }
    if channels == 0 {
        return Err(WavError::Parse("fmt declares zero channels".into()));
    }
    if sample_rate == 0 {
        return Err(WavError::Parse("fmt declares zero sample rate".into()));
    }
    Ok(Fmt {
        tag,
        channels,
        sample_rate,
        bits,
        block_align,
    })
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<MultichannelSignal, WavError> {
    let bytes = fs::read(path)?;
    decode_wav(&bytes)
}

pub fn decode_wav(bytes: &[u8]) -> Result<MultichannelSignal, WavError> {
    if bytes.len() < 12 {
        return Err(WavError::Parse(format!(
            "file too short for a RIFF header ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(WavError::Parse("missing RIFF magic".into()));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(WavError::Parse("missing WAVE form type".into()));
    }

    let mut fmt: Option<Fmt> = None;
    let mut offset = 12usize;
    while offset + 8 <= bytes.len() {
        let id = &bytes[offset..offset + 4];
        let size = u32_at(bytes, offset + 4)? as usize;
        let body = offset + 8;
        if body + size > bytes.len() {
            return Err(WavError::Parse(format!(
                "chunk {:?} declares {size} bytes but only {} remain",
                String::from_utf8_lossy(id),
                bytes.len() - body
            )));
        }
        match id {
            b"fmt " => fmt = Some(parse_fmt(&bytes[body..body + size])?),
            b"data" => {
                let fmt = fmt
                    .as_ref()
                    .ok_or_else(|| WavError::Parse("data chunk before fmt chunk".into()))?;
                return decode_data(fmt, &bytes[body..body + size]);
            }
            _ => {}
        }
        // Chunks are word aligned; odd sizes carry a pad byte.
        offset = body + size + (size % 2);
    }
    Err(WavError::Parse("no data chunk found".into()))
}

fn decode_data(fmt: &Fmt, data: &[u8]) -> Result<MultichannelSignal, WavError> {
    let sample_bytes = match (fmt.tag, fmt.bits) {
        (TAG_PCM, 16) => 2usize,
        (TAG_FLOAT, 32) => 4usize,
        (tag, bits) => {
            return Err(WavError::Unsupported(format!(
                "{} at {bits} bits (supported: pcm at 16 bits, ieee-float at 32 bits)",
                format_name(tag)
            )))
        }
    };
    let n_ch = fmt.channels as usize;
    let frame_bytes = sample_bytes * n_ch;
    if fmt.block_align as usize != frame_bytes {
        return Err(WavError::Parse(format!(
            "block align {} does not match {} channels of {} bytes",
            fmt.block_align, n_ch, sample_bytes
        )));
    }
    if data.len() % frame_bytes != 0 {
        return Err(WavError::Parse(format!(
            "data chunk of {} bytes is not a whole number of {frame_bytes}-byte frames",
            data.len()
        )));
    }
    let n_frames = data.len() / frame_bytes;
    let mut channels = vec![Vec::with_capacity(n_frames); n_ch];
    for frame in data.chunks_exact(frame_bytes) {
        for (ch, sample) in frame.chunks_exact(sample_bytes).enumerate() {
            let value = match sample_bytes {
                2 => i16::from_le_bytes([sample[0], sample[1]]) as f64 / 32768.0,
                _ => f32::from_le_bytes([sample[0], sample[1], sample[2], sample[3]]) as f64,
            };
            channels[ch].push(value);
        }
    }
    MultichannelSignal::new(fmt.sample_rate, channels)
        .map_err(|e| WavError::Parse(e.to_string()))
}

pub fn write_wav(
    path: impl AsRef<Path>,
    signal: &MultichannelSignal,
    format: SampleFormat,
) -> Result<(), WavError> {
    fs::write(path, encode_wav(signal, format)).map_err(WavError::from)
}

pub fn encode_wav(signal: &MultichannelSignal, format: SampleFormat) -> Vec<u8> {
    let n_ch = signal.num_channels() as u16;
    let n = signal.len();
    let (tag, bits, sample_bytes) = match format {
        SampleFormat::Pcm16 => (TAG_PCM, 16u16, 2usize),
        SampleFormat::Float32 => (TAG_FLOAT, 32u16, 4usize),
    };
    let block_align = sample_bytes as u16 * n_ch;
    let byte_rate = signal.fs() * block_align as u32;
    let data_len = n * block_align as usize;

    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&n_ch.to_le_bytes());
    out.extend_from_slice(&signal.fs().to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for i in 0..n {
        for ch in signal.channels() {
            match format {
                SampleFormat::Pcm16 => {
                    let v = (ch[i] * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    out.extend_from_slice(&v.to_le_bytes());
                }
                SampleFormat::Float32 => {
                    out.extend_from_slice(&(ch[i] as f32).to_le_bytes());
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_signal(fs: u32, n_ch: usize, n: usize, seed: u64) -> MultichannelSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channels = (0..n_ch)
            .map(|_| (0..n).map(|_| rng.random_range(-0.9..0.9)).collect())
            .collect();
        MultichannelSignal::new(fs, channels).unwrap()
    }

    #[test]
    fn float32_roundtrip_within_single_precision() {
        let sig = noise_signal(16000, 2, 500, 1);
        let back = decode_wav(&encode_wav(&sig, SampleFormat::Float32)).unwrap();
        assert_eq!(back.fs(), 16000);
        assert_eq!(back.num_channels(), 2);
        for ch in 0..2 {
            for (a, b) in sig.channel(ch).iter().zip(back.channel(ch)) {
                assert!((a - b).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn pcm16_roundtrip_within_quantization_step() {
        let sig = noise_signal(8000, 6, 300, 2);
        let back = decode_wav(&encode_wav(&sig, SampleFormat::Pcm16)).unwrap();
        assert_eq!(back.num_channels(), 6);
        for ch in 0..6 {
            for (a, b) in sig.channel(ch).iter().zip(back.channel(ch)) {
                assert!((a - b).abs() <= 1.0 / 32768.0);
            }
        }
    }

    #[test]
    fn file_roundtrip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let sig = noise_signal(16000, 2, 256, 3);
        write_wav(&path, &sig, SampleFormat::Float32).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.len(), 256);
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(decode_wav(&[]), Err(WavError::Parse(_))));
    }

    #[test]
    fn wrong_magic_is_a_parse_error() {
        let bytes = b"RIFX\x00\x00\x00\x00WAVE".to_vec();
        assert!(matches!(decode_wav(&bytes), Err(WavError::Parse(_))));
    }

    #[test]
    fn truncated_data_chunk_is_a_parse_error_not_a_partial_signal() {
        let mut bytes = encode_wav(&noise_signal(16000, 1, 100, 4), SampleFormat::Pcm16);
        bytes.truncate(bytes.len() - 37);
        assert!(matches!(decode_wav(&bytes), Err(WavError::Parse(_))));
    }

    #[test]
    fn unsupported_encoding_is_named() {
        // 8-bit PCM: tag 1, 8 bits per sample.
        let mut bytes = encode_wav(&noise_signal(16000, 1, 4, 5), SampleFormat::Pcm16);
        bytes[34] = 8; // bits per sample, low byte
        bytes[32] = 1; // block align for one 8-bit channel
        match decode_wav(&bytes) {
            Err(WavError::Unsupported(msg)) => {
                assert!(msg.contains("pcm"), "message: {msg}");
                assert!(msg.contains("8"), "message: {msg}");
            }
            other => panic!("expected Unsupported, got {other:?}"),
        }
    }

    #[test]
    fn unknown_chunks_are_skipped() {
        let sig = noise_signal(16000, 1, 64, 6);
        let encoded = encode_wav(&sig, SampleFormat::Float32);
        // Splice a junk chunk (odd size, so with a pad byte) after WAVE.
        let mut bytes = encoded[..12].to_vec();
        bytes.extend_from_slice(b"junk");
        bytes.extend_from_slice(&5u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 0]);
        bytes.extend_from_slice(&encoded[12..]);
        let back = decode_wav(&bytes).unwrap();
        assert_eq!(back.len(), 64);
    }

    #[test]
    fn data_before_fmt_is_a_parse_error() {
        let mut bytes = b"RIFF\x24\x00\x00\x00WAVE".to_vec();
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&0u32.to_le_bytes());
        assert!(matches!(decode_wav(&bytes), Err(WavError::Parse(msg)) if msg.contains("fmt")));
    }
}
