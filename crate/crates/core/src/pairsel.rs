//! Reduce a circular array to the best two channels for a given DOA.
//!
//! One diametric pair is selected by broadside proximity, then its two
//! spectrogram channels are phase-aligned so the source sits at the pair's
//! virtual center. Downstream processing can then treat the pair exactly
//! like a dual array looking broadside at the target.

use thiserror::Error;

use crate::dsp::{DspError, Spectrogram};
use crate::geometry::{alignment_vector, azimuth_to_local, wrap_deg_180, ArrayGeometry};
use crate::C64;

#[derive(Debug, Error)]
pub enum PairError {
    #[error("pair index {index} out of range for {pairs} pairs")]
    BadPair { index: usize, pairs: usize },
    #[error("geometry has {expected} mics but the spectrogram has {got} channels")]
    ChannelMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Index of the pair whose broadside lies nearest the DOA, with the DOA
/// folded into that pair's local frame. Either broadside of a pair counts
/// (a back-side source aliases onto the front anyway) and ties go to the
/// lowest pair index.
pub fn select_pair(azimuth_deg: f64, geometry: &ArrayGeometry) -> (usize, f64) {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for idx in 0..geometry.pairs().len() {
        let axis = geometry.pair_axis(idx);
        let front = wrap_deg_180(azimuth_deg - axis - 90.0).abs();
        let back = wrap_deg_180(azimuth_deg - axis + 90.0).abs();
        let dist = front.min(back);
        if dist + 1e-9 < best_dist {
            best_dist = dist;
            best = idx;
        }
    }
    let axis = geometry.pair_axis(best);
    let (theta_local, _mirrored) = azimuth_to_local(axis, azimuth_deg);
    (best, theta_local)
}

/// Extract one pair's channels and rotate each bin so a source at
/// `theta_local_deg` lands in phase on both, each at half amplitude. The
/// aligned pair behaves like a broadside dual capture referenced to the
/// pair midpoint.
pub fn align_pair(
    spec: &Spectrogram,
    pair_index: usize,
    theta_local_deg: f64,
    geometry: &ArrayGeometry,
    c: f64,
) -> Result<Spectrogram, PairError> {
    let pairs = geometry.pairs();
    if pair_index >= pairs.len() {
        return Err(PairError::BadPair {
            index: pair_index,
            pairs: pairs.len(),
        });
    }
    if spec.num_channels() != geometry.n_mics() {
        return Err(PairError::ChannelMismatch {
            got: spec.num_channels(),
            expected: geometry.n_mics(),
        });
    }
    let (ch_a, ch_b) = pairs[pair_index];
    let spacing = geometry.spacing();
    let fs = spec.fs();
    let fft_size = spec.config().fft_size;
    let hz_per_bin = fs as f64 / fft_size as f64;
    let factors: Vec<[C64; 2]> = (0..spec.bins())
        .map(|k| {
            let a = alignment_vector(k as f64 * hz_per_bin, spacing, theta_local_deg, c);
            [a[0].conj(), a[1].conj()]
        })
        .collect();
    let frames = (0..spec.num_frames())
        .map(|t| {
            let a = spec.channel_frame(t, ch_a);
            let b = spec.channel_frame(t, ch_b);
            vec![
                a.iter().zip(&factors).map(|(x, f)| x * f[0]).collect(),
                b.iter().zip(&factors).map(|(x, f)| x * f[1]).collect(),
            ]
        })
        .collect();
    Ok(Spectrogram::from_frames(fs, *spec.config(), frames)?)
}
