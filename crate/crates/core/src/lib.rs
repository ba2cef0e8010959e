//! Microphone-array beamforming toolkit.
//!
//! The crate covers the full chain from synthetic scene generation to
//! evaluated output SINR:
//!
//! * [`dsp`]: multichannel signal container and STFT/ISTFT front end.
//! * [`wav`]: minimal RIFF/WAVE I/O (16-bit PCM and 32-bit float).
//! * [`geometry`]: array constructions, steering phases, angle conventions.
//! * [`scenesim`]: deterministic anechoic far-field scene rendering.
//! * [`ssl`]: phase-vote localization for mic pairs and circular arrays.
//! * [`gevd`]: closed-form 2x2 Hermitian generalized eigensolver.
//! * [`maxsnr`]: the adaptive two-channel maximum-SNR beamformer.
//! * [`pairsel`]: broadside-nearest pair selection and phase alignment.
//! * [`eval`]: shadow-filtered SINR gains and direction sweeps.
//!
//! All angles at API boundaries are degrees; all spacings are meters.

pub mod dsp;
pub mod eval;
pub mod geometry;
pub mod gevd;
pub mod maxsnr;
pub mod pairsel;
pub mod scenesim;
pub mod ssl;
pub mod wav;

/// Complex sample type used throughout the spectral processing chain.
pub type C64 = num_complex::Complex<f64>;
