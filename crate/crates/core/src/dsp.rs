//! Multichannel time-domain containers and the STFT/ISTFT front end.
//!
//! Analysis slides a window by `hop` with no centering: frame `t` covers
//! samples `[t*hop, t*hop + fft_size)`, so a signal yields
//! `(len - fft_size) / hop + 1` frames. Only the non-negative half spectrum
//! (`fft_size/2 + 1` bins) is stored. Synthesis applies the analysis window
//! a second time and divides the overlap-add by the accumulated squared
//! window, which reconstructs unmodified frames exactly wherever that
//! accumulation is nonzero.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::C64;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("signal must have at least one channel")]
    NoChannels,
    #[error("channel {index} has {got} samples, expected {expected}")]
    ChannelLengthMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("fft_size must be an even number of at least 16, got {0}")]
    BadFftSize(usize),
    #[error("hop must be in 1..=fft_size, got hop {hop} with fft_size {fft_size}")]
    BadHop { hop: usize, fft_size: usize },
    #[error("need at least {needed} samples for one frame, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("frame holds {got} bins but the configuration expects {expected}")]
    BinCountMismatch { got: usize, expected: usize },
    #[error("spectrogram has no frames")]
    EmptySpectrogram,
}

/// Interleaving-free multichannel audio: one `Vec<f64>` per channel, all of
/// equal length, plus the sample rate.
#[derive(Debug, Clone)]
pub struct MultichannelSignal {
    fs: u32,
    channels: Vec<Vec<f64>>,
}

impl MultichannelSignal {
    pub fn new(fs: u32, channels: Vec<Vec<f64>>) -> Result<Self, DspError> {
        if fs == 0 {
            return Err(DspError::ZeroSampleRate);
        }
        if channels.is_empty() {
            return Err(DspError::NoChannels);
        }
        let expected = channels[0].len();
        for (index, ch) in channels.iter().enumerate() {
            if ch.len() != expected {
                return Err(DspError::ChannelLengthMismatch {
                    index,
                    got: ch.len(),
                    expected,
                });
            }
        }
        Ok(Self { fs, channels })
    }

    pub fn from_mono(fs: u32, samples: Vec<f64>) -> Self {
        Self {
            fs: fs.max(1),
            channels: vec![samples],
        }
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// New signal keeping only the listed channels, in the listed order.
    pub fn select_channels(&self, keep: &[usize]) -> Self {
        let channels = keep.iter().map(|&i| self.channels[i].clone()).collect();
        Self {
            fs: self.fs,
            channels,
        }
    }

    /// Sample-wise sum of two equally shaped signals.
    pub fn add(&self, other: &Self) -> Result<Self, DspError> {
        if other.num_channels() != self.num_channels() || other.len() != self.len() {
            return Err(DspError::ChannelLengthMismatch {
                index: 0,
                got: other.len(),
                expected: self.len(),
            });
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Self {
            fs: self.fs,
            channels,
        })
    }

    pub fn scaled(&self, gain: f64) -> Self {
        let channels = self
            .channels
            .iter()
            .map(|ch| ch.iter().map(|x| x * gain).collect())
            .collect();
        Self {
            fs: self.fs,
            channels,
        }
    }
}

/// Mean square of a slice; zero for an empty slice.
pub fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    Hann,
    SqrtHann,
}

impl Window {
    /// Periodic window coefficients of the given length.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| {
                let hann = 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos();
                match self {
                    Window::Rectangular => 1.0,
                    Window::Hann => hann,
                    Window::SqrtHann => hann.sqrt(),
                }
            })
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
            Window::SqrtHann => "sqrt-hann",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            fft_size: 512,
            hop: 256,
            window: Window::SqrtHann,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        if self.fft_size < 16 || self.fft_size % 2 != 0 {
            return Err(DspError::BadFftSize(self.fft_size));
        }
        if self.hop == 0 || self.hop > self.fft_size {
            return Err(DspError::BadHop {
                hop: self.hop,
                fft_size: self.fft_size,
            });
        }
        Ok(())
    }

    /// Number of stored bins: DC through Nyquist inclusive.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.fft_size {
            0
        } else {
            (len - self.fft_size) / self.hop + 1
        }
    }
}

/// Half-spectrum STFT frames laid out as `[frame][channel][bin]`.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    fs: u32,
    config: StftConfig,
    frames: Vec<Vec<Vec<C64>>>,
}

impl Spectrogram {
    pub fn from_frames(
        fs: u32,
        config: StftConfig,
        frames: Vec<Vec<Vec<C64>>>,
    ) -> Result<Self, DspError> {
        config.validate()?;
        let bins = config.bins();
        for frame in &frames {
            if frame.is_empty() {
                return Err(DspError::NoChannels);
            }
            for ch in frame {
                if ch.len() != bins {
                    return Err(DspError::BinCountMismatch {
                        got: ch.len(),
                        expected: bins,
                    });
                }
            }
        }
        Ok(Self { fs, config, frames })
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_channels(&self) -> usize {
        self.frames.first().map_or(0, |f| f.len())
    }

    pub fn bins(&self) -> usize {
        self.config.bins()
    }

    /// Center frequency of bin `k` in Hz.
    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.fs as f64 / self.config.fft_size as f64
    }

    pub fn frame(&self, t: usize) -> &[Vec<C64>] {
        &self.frames[t]
    }

    pub fn channel_frame(&self, t: usize, ch: usize) -> &[C64] {
        &self.frames[t][ch]
    }

    /// Spectrogram keeping only the listed channels, in the listed order.
    pub fn select_channels(&self, keep: &[usize]) -> Self {
        let frames = self
            .frames
            .iter()
            .map(|frame| keep.iter().map(|&c| frame[c].clone()).collect())
            .collect();
        Self {
            fs: self.fs,
            config: self.config,
            frames,
        }
    }

    /// Frame energy matching the windowed time-domain energy: the half
    /// spectrum is unfolded (interior bins doubled) and scaled by 1/N.
    pub fn frame_energy(&self, t: usize, ch: usize) -> f64 {
        let bins = self.bins();
        let n = self.config.fft_size as f64;
        let frame = &self.frames[t][ch];
        let mut sum = frame[0].norm_sqr() + frame[bins - 1].norm_sqr();
        for x in &frame[1..bins - 1] {
            sum += 2.0 * x.norm_sqr();
        }
        sum / n
    }
}

struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    size: usize,
}

impl FftPair {
    fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
            size,
        }
    }

    /// Forward transform of a windowed real frame; returns the half spectrum.
    fn real_forward(&self, windowed: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = windowed.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf.truncate(self.size / 2 + 1);
        buf
    }

    /// Inverse transform of a half spectrum back to `size` real samples.
    fn real_inverse(&self, half: &[C64]) -> Vec<f64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.size];
        buf[..half.len()].copy_from_slice(half);
        for k in 1..self.size / 2 {
            buf[self.size - k] = half[k].conj();
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        buf.iter().map(|x| x.re * scale).collect()
    }
}

pub fn stft(signal: &MultichannelSignal, config: &StftConfig) -> Result<Spectrogram, DspError> {
    config.validate()?;
    if signal.len() < config.fft_size {
        return Err(DspError::InsufficientSamples {
            needed: config.fft_size,
            got: signal.len(),
        });
    }
    let window = config.window.coefficients(config.fft_size);
    let fft = FftPair::new(config.fft_size);
    let n_frames = config.num_frames(signal.len());
    let mut frames = Vec::with_capacity(n_frames);
    let mut windowed = vec![0.0; config.fft_size];
    for t in 0..n_frames {
        let start = t * config.hop;
        let mut frame = Vec::with_capacity(signal.num_channels());
        for ch in signal.channels() {
            for (w, (x, coeff)) in windowed
                .iter_mut()
                .zip(ch[start..start + config.fft_size].iter().zip(&window))
            {
                *w = x * coeff;
            }
            frame.push(fft.real_forward(&windowed));
        }
        frames.push(frame);
    }
    Spectrogram::from_frames(signal.fs(), *config, frames)
}

/// Weighted overlap-add resynthesis. Output length is
/// `(num_frames - 1) * hop + fft_size`.
pub fn istft(spec: &Spectrogram) -> Result<MultichannelSignal, DspError> {
    let config = spec.config();
    config.validate()?;
    if spec.num_frames() == 0 {
        return Err(DspError::EmptySpectrogram);
    }
    let bins = config.bins();
    for t in 0..spec.num_frames() {
        for ch in 0..spec.num_channels() {
            let got = spec.channel_frame(t, ch).len();
            if got != bins {
                return Err(DspError::BinCountMismatch {
                    got,
                    expected: bins,
                });
            }
        }
    }
    let window = config.window.coefficients(config.fft_size);
    let fft = FftPair::new(config.fft_size);
    let out_len = (spec.num_frames() - 1) * config.hop + config.fft_size;
    let n_ch = spec.num_channels();
    let mut out = vec![vec![0.0; out_len]; n_ch];
    let mut norm = vec![0.0; out_len];
    for t in 0..spec.num_frames() {
        let start = t * config.hop;
        for (n, w) in window.iter().enumerate() {
            norm[start + n] += w * w;
        }
        for (ch, out_ch) in out.iter_mut().enumerate() {
            let time = fft.real_inverse(spec.channel_frame(t, ch));
            for (n, (x, w)) in time.iter().zip(&window).enumerate() {
                out_ch[start + n] += x * w;
            }
        }
    }
    for out_ch in &mut out {
        for (x, w) in out_ch.iter_mut().zip(&norm) {
            if *w > 1e-12 {
                *x /= *w;
            } else {
                *x = 0.0;
            }
        }
    }
    MultichannelSignal::new(spec.fs(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    // ---- 1. container invariants ----

    #[test]
    fn signal_rejects_mismatched_channel_lengths() {
        let err = MultichannelSignal::new(16000, vec![vec![0.0; 10], vec![0.0; 9]]);
        assert!(matches!(
            err,
            Err(DspError::ChannelLengthMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn signal_rejects_empty_channel_list() {
        assert!(matches!(
            MultichannelSignal::new(16000, vec![]),
            Err(DspError::NoChannels)
        ));
    }

    #[test]
    fn select_channels_preserves_order() {
        let sig =
            MultichannelSignal::new(8000, vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let sub = sig.select_channels(&[2, 0]);
        assert_eq!(sub.channel(0), &[3.0]);
        assert_eq!(sub.channel(1), &[1.0]);
    }

    // ---- 2. configuration validation ----

    #[test]
    fn config_rejects_zero_hop_and_oversized_hop() {
        let mut cfg = StftConfig::default();
        cfg.hop = 0;
        assert!(matches!(cfg.validate(), Err(DspError::BadHop { .. })));
        cfg.hop = cfg.fft_size + 1;
        assert!(matches!(cfg.validate(), Err(DspError::BadHop { .. })));
    }

    #[test]
    fn config_rejects_odd_fft_size() {
        let cfg = StftConfig {
            fft_size: 513,
            hop: 256,
            window: Window::Hann,
        };
        assert!(matches!(cfg.validate(), Err(DspError::BadFftSize(513))));
    }

    #[test]
    fn frame_count_formula() {
        let cfg = StftConfig::default();
        assert_eq!(cfg.num_frames(512), 1);
        assert_eq!(cfg.num_frames(767), 1);
        assert_eq!(cfg.num_frames(768), 2);
        assert_eq!(cfg.num_frames(16000), (16000 - 512) / 256 + 1);
    }

    // ---- 3. forward transform ----

    #[test]
    fn stft_of_zeros_is_zero() {
        let sig = MultichannelSignal::new(16000, vec![vec![0.0; 2048]]).unwrap();
        let spec = stft(&sig, &StftConfig::default()).unwrap();
        for t in 0..spec.num_frames() {
            for x in spec.channel_frame(t, 0) {
                assert_eq!(x.norm(), 0.0);
            }
        }
    }

    #[test]
    fn stft_rejects_short_input() {
        let sig = MultichannelSignal::new(16000, vec![vec![0.0; 100]]).unwrap();
        assert!(matches!(
            stft(&sig, &StftConfig::default()),
            Err(DspError::InsufficientSamples { needed: 512, .. })
        ));
    }

    #[test]
    fn rectangular_window_localizes_bin_aligned_cosine() {
        // One full frame of cos at bin 10 of a 512-point transform.
        let fs = 16000u32;
        let f = 10.0 * fs as f64 / 512.0;
        let x: Vec<f64> = (0..512)
            .map(|n| (2.0 * PI * f * n as f64 / fs as f64).cos())
            .collect();
        let cfg = StftConfig {
            fft_size: 512,
            hop: 512,
            window: Window::Rectangular,
        };
        let spec = stft(&MultichannelSignal::new(fs, vec![x]).unwrap(), &cfg).unwrap();
        let frame = spec.channel_frame(0, 0);
        let peak = (0..frame.len())
            .max_by(|&a, &b| frame[a].norm().total_cmp(&frame[b].norm()))
            .unwrap();
        assert_eq!(peak, 10);
    }

    #[test]
    fn dc_and_nyquist_bins_are_real_for_real_input() {
        let sig = MultichannelSignal::new(16000, vec![noise(1024, 3)]).unwrap();
        let spec = stft(&sig, &StftConfig::default()).unwrap();
        let bins = spec.bins();
        for t in 0..spec.num_frames() {
            let frame = spec.channel_frame(t, 0);
            assert!(frame[0].im.abs() < 1e-9);
            assert!(frame[bins - 1].im.abs() < 1e-9);
        }
    }

    #[test]
    fn frame_energy_matches_windowed_time_energy() {
        // Parseval check with an explicit time-domain sum.
        let x = noise(512, 9);
        let cfg = StftConfig {
            fft_size: 512,
            hop: 512,
            window: Window::Hann,
        };
        let sig = MultichannelSignal::new(16000, vec![x.clone()]).unwrap();
        let spec = stft(&sig, &cfg).unwrap();
        let w = Window::Hann.coefficients(512);
        let time: f64 = x.iter().zip(&w).map(|(v, c)| (v * c) * (v * c)).sum();
        let freq = spec.frame_energy(0, 0);
        assert!(
            (freq - time).abs() / time < 1e-6,
            "spectral {freq} vs time {time}"
        );
    }

    // ---- 4. round trips ----

    fn roundtrip_max_err(cfg: &StftConfig, seed: u64) -> f64 {
        let n = 8000;
        let x = noise(n, seed);
        let sig = MultichannelSignal::new(16000, vec![x.clone()]).unwrap();
        let spec = stft(&sig, cfg).unwrap();
        let back = istft(&spec).unwrap();
        let m = back.len().min(n);
        // Weighted OLA is exact wherever the analysis windows deposit any
        // energy. Sample 0 is the one exception: tapered windows are zero
        // there, so nothing was recorded about it.
        x[1..m]
            .iter()
            .zip(&back.channel(0)[1..m])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn roundtrip_exact_for_supported_window_hop_pairs() {
        let cases = [
            (Window::SqrtHann, 256),
            (Window::SqrtHann, 128),
            (Window::Hann, 256),
            (Window::Hann, 128),
            (Window::Rectangular, 512),
            (Window::Rectangular, 256),
        ];
        for (seed, (window, hop)) in cases.into_iter().enumerate() {
            let cfg = StftConfig {
                fft_size: 512,
                hop,
                window,
            };
            let err = roundtrip_max_err(&cfg, seed as u64 + 1);
            assert!(
                err < 1e-3,
                "{} hop {hop}: max err {err}",
                window.name()
            );
        }
    }

    #[test]
    fn roundtrip_multichannel() {
        let sig =
            MultichannelSignal::new(16000, vec![noise(4096, 5), noise(4096, 6)]).unwrap();
        let spec = stft(&sig, &StftConfig::default()).unwrap();
        let back = istft(&spec).unwrap();
        assert_eq!(back.num_channels(), 2);
        for ch in 0..2 {
            // Skip sample 0: the tapered analysis window is zero there.
            for (a, b) in sig.channel(ch).iter().zip(back.channel(ch)).skip(1) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn istft_rejects_bin_count_mismatch() {
        let cfg = StftConfig::default();
        let frames = vec![vec![vec![C64::new(0.0, 0.0); 100]]];
        assert!(matches!(
            Spectrogram::from_frames(16000, cfg, frames),
            Err(DspError::BinCountMismatch { got: 100, .. })
        ));
    }

    #[test]
    fn istft_reconstructs_bin_aligned_sinusoid() {
        // Single-bin spectrum, rectangular non-overlapping frames: the
        // resynthesis must equal the sampled sinusoid it encodes.
        let fft_size = 512;
        let cfg = StftConfig {
            fft_size,
            hop: fft_size,
            window: Window::Rectangular,
        };
        let k = 10;
        let mut frame = vec![C64::new(0.0, 0.0); cfg.bins()];
        // cos(2 pi k n / N) has half-spectrum amplitude N/2 at bin k.
        frame[k] = C64::new(fft_size as f64 / 2.0, 0.0);
        let spec = Spectrogram::from_frames(16000, cfg, vec![vec![frame]]).unwrap();
        let out = istft(&spec).unwrap();
        for (n, got) in out.channel(0).iter().enumerate() {
            let want = (2.0 * PI * k as f64 * n as f64 / fft_size as f64).cos();
            assert!((got - want).abs() < 1e-9, "sample {n}: {got} vs {want}");
        }
    }
}
