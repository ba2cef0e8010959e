//! Anechoic far-field scene synthesis with ground-truth components.
//!
//! Sources are mono signals placed at an azimuth; each mic hears the source
//! through a pure fractional delay realized as a frequency-domain phase
//! ramp. Mixtures are assembled at a prescribed input SINR measured on
//! channel 0, and the clean components are kept alongside the mixture so
//! evaluation can attribute output power exactly.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::dsp::{mean_power, DspError, MultichannelSignal};
use crate::geometry::{ArrayGeometry, SPEED_OF_SOUND};
use crate::C64;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("degenerate scene: {0}")]
    Degenerate(String),
    #[error("azimuth {0} out of [0, 360)")]
    BadAzimuth(f64),
    #[error("scene duration must be positive, got {0}")]
    BadDuration(f64),
    #[error("finite input SINR needs at least one interferer or diffuse noise")]
    NoInterference,
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Tone frequencies of the tonal interference kind, Hz. All sit below the
/// 85 mm spatial-aliasing limit so they land inside the localization band.
pub const TONAL_FREQS_HZ: [f64; 5] = [320.0, 640.0, 980.0, 1400.0, 1870.0];

/// Band of the babble-like and speech-like kinds, Hz.
pub const SPEECH_BAND_HZ: (f64, f64) = (300.0, 3400.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    Sine { freq_hz: f64 },
    White,
    Tonal,
    BabbleLike,
    SpeechLike,
}

impl SignalKind {
    pub fn generate(&self, fs: u32, n: usize, seed: u64) -> Vec<f64> {
        match *self {
            SignalKind::Sine { freq_hz } => gen_sine(freq_hz, fs, n, 1.0, 0.0),
            SignalKind::White => gen_white(n, seed),
            SignalKind::Tonal => gen_tonal(fs, n, seed),
            SignalKind::BabbleLike => gen_babble(fs, n, seed),
            SignalKind::SpeechLike => gen_speech_like(fs, n, seed),
        }
    }
}

pub fn gen_sine(freq_hz: f64, fs: u32, n: usize, amplitude: f64, phase_rad: f64) -> Vec<f64> {
    let w = 2.0 * PI * freq_hz / fs as f64;
    (0..n)
        .map(|i| amplitude * (w * i as f64 + phase_rad).sin())
        .collect()
}

/// Unit-variance white Gaussian noise.
pub fn gen_white(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Sum of the five fixed tones with seeded random phases, unit RMS.
pub fn gen_tonal(fs: u32, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n];
    for &f in TONAL_FREQS_HZ.iter() {
        let phase = rng.random_range(0.0..2.0 * PI);
        let w = 2.0 * PI * f / fs as f64;
        for (i, x) in out.iter_mut().enumerate() {
            *x += (w * i as f64 + phase).sin();
        }
    }
    rms_normalize(&mut out);
    out
}

/// Speech-band-limited Gaussian noise, unit RMS.
pub fn gen_babble(fs: u32, n: usize, seed: u64) -> Vec<f64> {
    let mut out = fft_bandpass(&gen_white(n, seed), fs, SPEECH_BAND_HZ.0, SPEECH_BAND_HZ.1);
    rms_normalize(&mut out);
    out
}

/// Speech-band noise under a syllabic envelope: bursts around 3.3 Hz with
/// a slower phrase modulation and a small floor keeping the quiet stretches
/// nonzero. The strong level contrast between frames is what lets the
/// weighted covariances tell a speech-like target apart from stationary
/// interference; a flat-envelope target leaves them proportional.
pub fn gen_speech_like(fs: u32, n: usize, seed: u64) -> Vec<f64> {
    let mut out = fft_bandpass(&gen_white(n, seed), fs, SPEECH_BAND_HZ.0, SPEECH_BAND_HZ.1);
    for (i, x) in out.iter_mut().enumerate() {
        let t = i as f64 / fs as f64;
        let syllable = (0.5 - 0.5 * (2.0 * PI * 3.3 * t).cos()).powi(2);
        let phrase = 0.4 + 0.6 * (0.5 - 0.5 * (2.0 * PI * 0.6 * t + 1.1).cos());
        *x *= 0.1 + 0.9 * syllable * phrase;
    }
    rms_normalize(&mut out);
    out
}

fn rms_normalize(x: &mut [f64]) {
    let p = mean_power(x);
    if p > 0.0 {
        let g = 1.0 / p.sqrt();
        for v in x.iter_mut() {
            *v *= g;
        }
    }
}

/// Zero out spectral content outside [lo_hz, hi_hz] with a full-length FFT.
fn fft_bandpass(x: &[f64], fs: u32, lo_hz: f64, hi_hz: f64) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    forward.process(&mut buf);
    for (j, v) in buf.iter_mut().enumerate() {
        let f = signed_bin_freq(j, n, fs).abs();
        if f < lo_hz || f > hi_hz {
            *v = C64::new(0.0, 0.0);
        }
    }
    inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|v| v.re * scale).collect()
}

fn signed_bin_freq(j: usize, n: usize, fs: u32) -> f64 {
    let half = n.div_ceil(2);
    let idx = if j < half { j as f64 } else { j as f64 - n as f64 };
    idx * fs as f64 / n as f64
}

/// Smallest odd number >= n whose prime factors are all <= 13, so the
/// render transform avoids Bluestein. Falls back to the next odd number if
/// the search drags on.
fn next_odd_smooth(n: usize) -> usize {
    let mut cand = if n % 2 == 0 { n + 1 } else { n };
    for _ in 0..4096 {
        let mut m = cand;
        for p in [3usize, 5, 7, 11, 13] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return cand;
        }
        cand += 2;
    }
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// Propagate a mono source from `azimuth_deg` to every mic of the array.
///
/// Channel `i` is the source advanced by `(p_i . u) / c` seconds, where `u`
/// is the unit vector from the array center toward the source: mics nearer
/// the source hear the wavefront earlier. The delay is exact in the
/// frequency domain; a 100 ms zero guard on both sides is trimmed after the
/// inverse transform so circular wrap-around never reaches the output, and
/// the padded length is forced odd to keep the ramp off a Nyquist bin.
pub fn render_far_field(
    source: &[f64],
    fs: u32,
    azimuth_deg: f64,
    geometry: &ArrayGeometry,
) -> MultichannelSignal {
    let n = source.len();
    let guard = (0.1 * fs as f64).ceil() as usize;
    let padded = next_odd_smooth(n + 2 * guard);
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(padded);
    let inverse = planner.plan_fft_inverse(padded);

    let mut spectrum = vec![C64::new(0.0, 0.0); padded];
    for (dst, &v) in spectrum[guard..guard + n].iter_mut().zip(source) {
        *dst = C64::new(v, 0.0);
    }
    forward.process(&mut spectrum);

    let az = azimuth_deg.to_radians();
    let u = [az.cos(), az.sin()];
    let scale = 1.0 / padded as f64;
    let channels = geometry
        .positions()
        .iter()
        .map(|p| {
            let tau = -(p[0] * u[0] + p[1] * u[1]) / SPEED_OF_SOUND;
            let mut buf: Vec<C64> = spectrum
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    let f = signed_bin_freq(j, padded, fs);
                    v * C64::from_polar(1.0, -2.0 * PI * f * tau)
                })
                .collect();
            inverse.process(&mut buf);
            buf[guard..guard + n].iter().map(|v| v.re * scale).collect()
        })
        .collect();
    MultichannelSignal::new(fs, channels).expect("geometry has mics and lengths match")
}

/// One directional source: what it plays and where it sits.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub kind: SignalKind,
    pub azimuth_deg: f64,
}

/// Declarative scene: a target, optional directional interferers, an
/// optional per-channel diffuse noise floor (level in dB relative to the
/// target on channel 0, applied before the SINR scaling), and the input
/// SINR the mixture must exhibit on channel 0.
#[derive(Debug, Clone)]
pub struct Scene {
    pub target: SourceSpec,
    pub interferers: Vec<SourceSpec>,
    pub diffuse_noise_db: Option<f64>,
    pub input_sinr_db: f64,
    pub geometry: ArrayGeometry,
    pub fs: u32,
    pub duration_s: f64,
}

impl Scene {
    pub fn validate(&self) -> Result<(), SceneError> {
        for az in std::iter::once(self.target.azimuth_deg)
            .chain(self.interferers.iter().map(|s| s.azimuth_deg))
        {
            if !(0.0..360.0).contains(&az) {
                return Err(SceneError::BadAzimuth(az));
            }
        }
        if !(self.duration_s > 0.0) {
            return Err(SceneError::BadDuration(self.duration_s));
        }
        if self.input_sinr_db.is_finite()
            && self.interferers.is_empty()
            && self.diffuse_noise_db.is_none()
        {
            return Err(SceneError::NoInterference);
        }
        Ok(())
    }

    pub fn num_samples(&self) -> usize {
        (self.duration_s * self.fs as f64).round() as usize
    }
}

/// A rendered scene: the mixture plus its two clean components. The
/// mixture is the sample-wise sum of the components by construction.
#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub mixture: MultichannelSignal,
    pub target_only: MultichannelSignal,
    pub interference_plus_noise_only: MultichannelSignal,
}

impl RenderedScene {
    /// Input SINR on channel 0 as actually stored, in dB. Infinite when
    /// the interference component is silent.
    pub fn measured_input_sinr_db(&self) -> f64 {
        let pt = mean_power(self.target_only.channel(0));
        let pv = mean_power(self.interference_plus_noise_only.channel(0));
        10.0 * (pt / pv).log10()
    }
}

/// Scale `interference` so the channel-0 power ratio hits `input_sinr_db`,
/// then sum. Components are stored unmodified (target) and scaled
/// (interference), so re-measuring the mixture returns the request.
pub fn mix_at_sinr(
    target: &MultichannelSignal,
    interference: &MultichannelSignal,
    input_sinr_db: f64,
) -> Result<RenderedScene, SceneError> {
    if !input_sinr_db.is_finite() {
        return Err(SceneError::Degenerate("input SINR must be finite".into()));
    }
    let pt = mean_power(target.channel(0));
    let pv = mean_power(interference.channel(0));
    if pt <= 0.0 {
        return Err(SceneError::Degenerate("target power is zero".into()));
    }
    if pv <= 0.0 {
        return Err(SceneError::Degenerate(
            "interference power is zero".into(),
        ));
    }
    let gain = (pt / (pv * 10f64.powf(input_sinr_db / 10.0))).sqrt();
    let interference = interference.scaled(gain);
    let mixture = target.add(&interference)?;
    Ok(RenderedScene {
        mixture,
        target_only: target.clone(),
        interference_plus_noise_only: interference,
    })
}

/// Render a [`Scene`]: generate and propagate every source, add diffuse
/// noise, and mix at the requested SINR. Sub-seeds are drawn from `seed`
/// in a fixed order (target, interferers in list order, diffuse), so a
/// scene renders identically across runs and platforms.
pub fn render_scene(scene: &Scene, seed: u64) -> Result<RenderedScene, SceneError> {
    scene.validate()?;
    let n = scene.num_samples();
    let fs = scene.fs;
    let mut master = ChaCha8Rng::seed_from_u64(seed);

    let target_seed = master.random();
    let target_mono = scene.target.kind.generate(fs, n, target_seed);
    let target = render_far_field(&target_mono, fs, scene.target.azimuth_deg, &scene.geometry);

    let mut interference: Option<MultichannelSignal> = None;
    for spec in &scene.interferers {
        let s = spec.kind.generate(fs, n, master.random());
        let rendered = render_far_field(&s, fs, spec.azimuth_deg, &scene.geometry);
        interference = Some(match interference {
            Some(acc) => acc.add(&rendered)?,
            None => rendered,
        });
    }
    if let Some(db) = scene.diffuse_noise_db {
        let level = (mean_power(target.channel(0)) * 10f64.powf(db / 10.0)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let channels = (0..scene.geometry.n_mics())
            .map(|_| {
                (0..n)
                    .map(|_| level * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let diffuse = MultichannelSignal::new(fs, channels)?;
        interference = Some(match interference {
            Some(acc) => acc.add(&diffuse)?,
            None => diffuse,
        });
    }

    match interference {
        Some(v) if scene.input_sinr_db.is_finite() => {
            mix_at_sinr(&target, &v, scene.input_sinr_db)
        }
        _ => {
            // Target-only scene: the interference component is silence.
            let zeros = target.scaled(0.0);
            Ok(RenderedScene {
                mixture: target.clone(),
                target_only: target,
                interference_plus_noise_only: zeros,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{stft, MultichannelSignal, StftConfig, Window};
    use crate::geometry::{self, local_to_azimuth, phase_difference, wrap_rad};

    const D: f64 = 0.085;
    const FS: u32 = 16000;

    fn dual() -> ArrayGeometry {
        ArrayGeometry::make_dual(D).unwrap()
    }

    // ---- 1. generators ----

    #[test]
    fn white_is_seeded_and_near_unit_variance() {
        let a = gen_white(20000, 7);
        let b = gen_white(20000, 7);
        assert_eq!(a, b, "same seed must reproduce the sequence");
        assert_ne!(a, gen_white(20000, 8));
        let var = mean_power(&a);
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn tonal_energy_sits_on_the_five_tones() {
        let x = gen_tonal(FS, 16000, 3);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(16000);
        let mut buf: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        let total: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
        // 1 Hz resolution and integer tone frequencies: +-1 bin suffices.
        let near: f64 = buf
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let f = signed_bin_freq(*j, 16000, FS).abs();
                TONAL_FREQS_HZ.iter().any(|t| (f - t).abs() <= 1.0)
            })
            .map(|(_, v)| v.norm_sqr())
            .sum();
        assert!(near / total > 0.999, "fraction {}", near / total);
    }

    #[test]
    fn babble_energy_stays_in_the_speech_band() {
        let x = gen_babble(FS, 16000, 5);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(16000);
        let mut buf: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        let total: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
        let in_band: f64 = buf
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let f = signed_bin_freq(*j, 16000, FS).abs();
                (SPEECH_BAND_HZ.0..=SPEECH_BAND_HZ.1).contains(&f)
            })
            .map(|(_, v)| v.norm_sqr())
            .sum();
        assert!(in_band / total > 0.999, "fraction {}", in_band / total);
        assert!((mean_power(&x) - 1.0).abs() < 1e-9, "unit RMS");
    }

    #[test]
    fn speech_like_has_strong_level_contrast_between_frames() {
        let x = gen_speech_like(FS, 32000, 11);
        let frame = 800;
        let energies: Vec<f64> = x.chunks_exact(frame).map(mean_power).collect();
        let max = energies.iter().cloned().fold(0.0, f64::max);
        let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            max / min > 5.0,
            "frame energy contrast {max}/{min} too flat"
        );
    }

    #[test]
    fn sine_generator_amplitude_and_length() {
        let x = gen_sine(440.0, FS, 1000, 0.5, 0.0);
        assert_eq!(x.len(), 1000);
        assert_eq!(x[0], 0.0);
        let peak = x.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 0.5).abs() < 1e-3);
    }

    // ---- 2. far-field rendering ----

    #[test]
    fn broadside_renders_identical_channels() {
        // Dual pair axis is 0 degrees, so broadside is azimuth 90.
        let src = gen_white(6000, 1);
        let out = render_far_field(&src, FS, 90.0, &dual());
        let diff = out
            .channel(0)
            .iter()
            .zip(out.channel(1))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9, "max channel difference {diff}");
    }

    #[test]
    fn endfire_cross_correlation_lag_matches_geometry() {
        // Azimuth 0 lies on the pair axis toward mic 1, so channel 0 lags
        // channel 1 by d/c = 247.8 us = 3.965 samples at 16 kHz.
        let src = gen_white(8000, 2);
        let out = render_far_field(&src, FS, 0.0, &dual());
        let lag_expected = D / SPEED_OF_SOUND * FS as f64;
        let best = (-8i64..=8)
            .max_by(|&a, &b| {
                let xc = |lag: i64| -> f64 {
                    (200..7800)
                        .map(|t| {
                            out.channel(0)[t] * out.channel(1)[(t as i64 - lag) as usize]
                        })
                        .sum()
                };
                xc(a).total_cmp(&xc(b))
            })
            .unwrap();
        assert!(
            (best as f64 - lag_expected).abs() <= 0.5,
            "peak lag {best} vs geometric {lag_expected}"
        );
    }

    #[test]
    fn rendered_pair_phase_matches_prediction_at_a_bin_center() {
        // Tone at exactly bin 32 of a 512 transform, integer cycles over
        // the source: rectangular frames see a single clean bin, and the
        // cross phase must equal the pair phase model almost exactly.
        let f = 1000.0;
        let theta = 30.0;
        let src = gen_sine(f, FS, 16000, 1.0, 0.0);
        let out = render_far_field(&src, FS, local_to_azimuth(0.0, theta), &dual());
        let cfg = StftConfig {
            fft_size: 512,
            hop: 512,
            window: Window::Rectangular,
        };
        let spec = stft(&out, &cfg).unwrap();
        let want = phase_difference(f, D, theta, SPEED_OF_SOUND);
        for t in 5..20 {
            let y = spec.channel_frame(t, 0)[32] * spec.channel_frame(t, 1)[32].conj();
            let err = wrap_rad(y.arg() - want).abs();
            assert!(err < 1e-6, "frame {t}: phase error {err}");
        }
    }

    #[test]
    fn smooth_burst_projection_matches_prediction_off_bin_centers() {
        // Hann-enveloped tones at arbitrary (f, theta): project both
        // channels onto the carrier with the same positive window, whose
        // realness keeps the projection phase free of envelope bias.
        for &(f, theta) in &[(313.7, -55.0), (777.3, 12.0), (1533.9, 68.0)] {
            let n = 16000;
            let env: Vec<f64> = (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect();
            let src: Vec<f64> = gen_sine(f, FS, n, 1.0, 0.0)
                .iter()
                .zip(&env)
                .map(|(s, e)| s * e)
                .collect();
            let out = render_far_field(&src, FS, local_to_azimuth(0.0, theta), &dual());
            let project = |ch: &[f64]| -> C64 {
                ch.iter()
                    .zip(&env)
                    .enumerate()
                    .map(|(i, (&x, &w))| {
                        C64::from_polar(x * w, -2.0 * PI * f * i as f64 / FS as f64)
                    })
                    .sum()
            };
            let y = project(out.channel(0)) * project(out.channel(1)).conj();
            let want = phase_difference(f, D, theta, SPEED_OF_SOUND);
            let err = wrap_rad(y.arg() - want).abs();
            assert!(err < 1e-6, "f {f} theta {theta}: phase error {err}");
        }
    }

    #[test]
    fn circular_mirror_pair_sees_mirrored_phase() {
        // The same source produces the same pair phase for an azimuth and
        // its reflection across that pair's axis.
        let geom = ArrayGeometry::make_circular(6, D).unwrap();
        let axis = geom.pair_axis(1);
        let az = 100.0;
        let mirrored = geometry::mirror_azimuth(axis, az);
        let src = gen_sine(500.0, FS, 8000, 1.0, 0.3);
        let a = render_far_field(&src, FS, az, &geom);
        let b = render_far_field(&src, FS, mirrored, &geom);
        let (ch0, ch1) = (geom.pairs()[1].0, geom.pairs()[1].1);
        let project = |sig: &MultichannelSignal, ch: usize| -> C64 {
            sig.channel(ch)
                .iter()
                .enumerate()
                .map(|(i, &x)| C64::from_polar(x, -2.0 * PI * 500.0 * i as f64 / FS as f64))
                .sum()
        };
        let pa = (project(&a, ch0) * project(&a, ch1).conj()).arg();
        let pb = (project(&b, ch0) * project(&b, ch1).conj()).arg();
        assert!(
            wrap_rad(pa - pb).abs() < 1e-4,
            "pair phase {pa} vs mirrored {pb}"
        );
    }

    // ---- 3. mixing ----

    fn two_channel(fs: u32, a: Vec<f64>, b: Vec<f64>) -> MultichannelSignal {
        MultichannelSignal::new(fs, vec![a, b]).unwrap()
    }

    #[test]
    fn mix_hits_the_requested_ratio() {
        let t = two_channel(FS, gen_white(8000, 1), gen_white(8000, 2));
        let loud: Vec<f64> = gen_white(8000, 3).iter().map(|x| 3.0 * x).collect();
        let v = two_channel(FS, loud, gen_white(8000, 4));
        for want in [0.0, 6.0, -3.0] {
            let r = mix_at_sinr(&t, &v, want).unwrap();
            let got = r.measured_input_sinr_db();
            assert!((got - want).abs() < 0.01, "requested {want} got {got}");
        }
    }

    #[test]
    fn mixture_is_the_exact_sum_of_its_components() {
        let t = two_channel(FS, gen_white(4000, 5), gen_white(4000, 6));
        let v = two_channel(FS, gen_white(4000, 7), gen_white(4000, 8));
        let r = mix_at_sinr(&t, &v, 6.0).unwrap();
        for ch in 0..2 {
            for i in 0..4000 {
                let sum = r.target_only.channel(ch)[i]
                    + r.interference_plus_noise_only.channel(ch)[i];
                assert_eq!(r.mixture.channel(ch)[i], sum, "ch {ch} sample {i}");
            }
        }
    }

    #[test]
    fn mix_rejects_silent_components() {
        let t = two_channel(FS, vec![0.0; 100], vec![0.0; 100]);
        let v = two_channel(FS, gen_white(100, 1), gen_white(100, 2));
        assert!(matches!(
            mix_at_sinr(&t, &v, 0.0),
            Err(SceneError::Degenerate(_))
        ));
        assert!(matches!(
            mix_at_sinr(&v, &t, 0.0),
            Err(SceneError::Degenerate(_))
        ));
    }

    // ---- 4. whole scenes ----

    fn demo_scene() -> Scene {
        Scene {
            target: SourceSpec {
                kind: SignalKind::SpeechLike,
                azimuth_deg: 85.0,
            },
            interferers: vec![SourceSpec {
                kind: SignalKind::White,
                azimuth_deg: 200.0,
            }],
            diffuse_noise_db: Some(-30.0),
            input_sinr_db: 6.0,
            geometry: ArrayGeometry::make_circular(6, D).unwrap(),
            fs: FS,
            duration_s: 1.0,
        }
    }

    #[test]
    fn scene_renders_deterministically_at_the_requested_sinr() {
        let scene = demo_scene();
        let a = render_scene(&scene, 42).unwrap();
        assert_eq!(a.mixture.num_channels(), 6);
        assert_eq!(a.mixture.len(), 16000);
        let got = a.measured_input_sinr_db();
        assert!((got - 6.0).abs() < 0.01, "sinr {got}");
        let b = render_scene(&scene, 42).unwrap();
        for ch in 0..6 {
            assert_eq!(a.mixture.channel(ch), b.mixture.channel(ch));
        }
        let c = render_scene(&scene, 43).unwrap();
        assert_ne!(a.mixture.channel(0), c.mixture.channel(0));
    }

    #[test]
    fn target_only_scene_has_silent_interference_component() {
        let mut scene = demo_scene();
        scene.interferers.clear();
        scene.diffuse_noise_db = None;
        scene.input_sinr_db = f64::INFINITY;
        let r = render_scene(&scene, 1).unwrap();
        assert!(mean_power(r.interference_plus_noise_only.channel(0)) == 0.0);
        assert_eq!(r.mixture.channel(0), r.target_only.channel(0));
        assert!(r.measured_input_sinr_db().is_infinite());
    }

    #[test]
    fn scene_validation_catches_bad_fields() {
        let mut s = demo_scene();
        s.target.azimuth_deg = 360.0;
        assert!(matches!(s.validate(), Err(SceneError::BadAzimuth(_))));
        let mut s = demo_scene();
        s.duration_s = 0.0;
        assert!(matches!(s.validate(), Err(SceneError::BadDuration(_))));
        let mut s = demo_scene();
        s.interferers.clear();
        s.diffuse_noise_db = None;
        assert!(matches!(s.validate(), Err(SceneError::NoInterference)));
    }
}
