//! DOA estimation by per-bin phase voting.
//!
//! Every valid bin below the spatial-aliasing limit casts a vote for the
//! angle its inter-channel phase implies. A dual pair votes on a local
//! broadside grid in [-90, 90] and reads the peak cell. A circular array
//! votes each pair's estimate and its mirror into a shared 360 degree
//! histogram, where the true direction accumulates across pairs and the
//! mirrors scatter; its estimate is the center of the strongest cluster
//! of cells rather than the single peak cell. The margin over the second
//! peak (the gap) feeds the adaptive beamwidth downstream.

use thiserror::Error;

use crate::dsp::Spectrogram;
use crate::geometry::{
    aliasing_limit_hz, local_to_azimuth, mirror_azimuth, wrap_deg_360, ArrayGeometry,
};
use crate::C64;

pub const VOTE_BAND_LOW_HZ: f64 = 100.0;
pub const VOTE_BAND_HIGH_HZ: f64 = 2000.0;
pub const DUAL_GRID_STEP_DEG: f64 = 5.0;
pub const CIRCULAR_GRID_STEP_DEG: f64 = 2.0;

/// Cross-spectra with modulus below this carry no usable phase.
pub const PHASE_VALID_EPS: f64 = 1e-12;

/// Cells closer than this to the main peak count as its own lobe, not as a
/// second source.
pub const MIN_PEAK_SEPARATION_CELLS: usize = 2;

/// Window width, in cells, of the cluster reduction on wraparound grids.
pub const CLUSTER_WINDOW_CELLS: usize = 5;

#[derive(Debug, Error)]
pub enum SslError {
    #[error("no votes: no valid bins below the aliasing limit")]
    NoVotes,
    #[error("expected {expected} channels, got {got}")]
    BadChannels { got: usize, expected: usize },
    #[error("circular localization needs at least 2 pairs")]
    NotCircular,
}

/// Per-bin phase of `a . conj(b)` in (-pi, pi]; `None` where the cross
/// power is too small to trust.
pub fn bin_phase(frame_a: &[C64], frame_b: &[C64]) -> Vec<Option<f64>> {
    frame_a
        .iter()
        .zip(frame_b)
        .map(|(a, b)| {
            let y = a * b.conj();
            if y.norm() < PHASE_VALID_EPS {
                None
            } else {
                Some(y.arg())
            }
        })
        .collect()
}

/// Pair-local angle implied by phase `psi` at frequency `f_hz`, degrees.
/// The sine is clamped so noise pushing the phase past the endfire value
/// still votes at +-90 instead of being dropped.
pub fn theta_from_phase(psi: f64, f_hz: f64, spacing_m: f64, c: f64) -> f64 {
    let s = psi * c / (2.0 * std::f64::consts::PI * f_hz * spacing_m);
    s.clamp(-1.0, 1.0).asin().to_degrees()
}

/// Inclusive bin range eligible to vote: at or above the low band edge,
/// at or below both the high band edge and the aliasing limit.
pub fn voting_bins(
    fs: u32,
    fft_size: usize,
    spacing_m: f64,
    c: f64,
) -> std::ops::RangeInclusive<usize> {
    let hz_per_bin = fs as f64 / fft_size as f64;
    let high = VOTE_BAND_HIGH_HZ.min(aliasing_limit_hz(spacing_m, c));
    let lo = (VOTE_BAND_LOW_HZ / hz_per_bin).ceil() as usize;
    let hi = ((high / hz_per_bin).floor() as usize).min(fft_size / 2);
    lo..=hi
}

/// Angle grid backing a vote histogram. Dual grids span [-90, 90] with a
/// cell centered on every multiple of the step; circular grids tile the
/// full circle and wrap.
#[derive(Debug, Clone, Copy)]
pub struct VoteGrid {
    pub start_deg: f64,
    pub step_deg: f64,
    pub cells: usize,
    pub circular: bool,
}

impl VoteGrid {
    pub fn dual(step_deg: f64) -> Self {
        Self {
            start_deg: -90.0,
            step_deg,
            cells: (180.0 / step_deg).round() as usize + 1,
            circular: false,
        }
    }

    pub fn full_circle(step_deg: f64) -> Self {
        Self {
            start_deg: 0.0,
            step_deg,
            cells: (360.0 / step_deg).round() as usize,
            circular: true,
        }
    }

    pub fn cell_of(&self, deg: f64) -> usize {
        if self.circular {
            let idx = (wrap_deg_360(deg) / self.step_deg).round() as usize;
            idx % self.cells
        } else {
            let idx = ((deg - self.start_deg) / self.step_deg).round();
            (idx.max(0.0) as usize).min(self.cells - 1)
        }
    }

    pub fn center(&self, idx: usize) -> f64 {
        self.start_deg + idx as f64 * self.step_deg
    }

    /// Cell distance, along the wrap for circular grids.
    pub fn distance(&self, i: usize, j: usize) -> usize {
        let d = i.abs_diff(j);
        if self.circular {
            d.min(self.cells - d)
        } else {
            d
        }
    }
}

#[derive(Debug, Clone)]
pub struct DoaEstimate {
    /// Center of the winning cell: a pair-local broadside angle for dual
    /// grids, a global azimuth for circular grids.
    pub azimuth_deg: f64,
    pub histogram: Vec<u64>,
    pub n_votes: u64,
    pub peak_count: u64,
    /// Largest count at least [`MIN_PEAK_SEPARATION_CELLS`] away from the
    /// peak.
    pub second_count: u64,
    pub gap: u64,
    pub grid: VoteGrid,
}

/// Accumulates votes across frames; associative, so frames may be added in
/// any grouping.
#[derive(Debug, Clone)]
pub struct VoteAccumulator {
    grid: VoteGrid,
    histogram: Vec<u64>,
    clamp_cells: Vec<usize>,
}

impl VoteAccumulator {
    pub fn new(grid: VoteGrid) -> Self {
        Self {
            histogram: vec![0; grid.cells],
            grid,
            clamp_cells: Vec::new(),
        }
    }

    /// Registers the cells that asin clamping funnels overshoot votes into:
    /// each pair's two endfire directions. Cluster scoring caps these cells
    /// at their taller neighbor so the funnel spike cannot outvote or drag
    /// a genuine cluster; the raw histogram is not modified.
    pub fn with_clamp_cells(mut self, geometry: &ArrayGeometry) -> Self {
        for p in 0..geometry.pairs().len() {
            let axis = geometry.pair_axis(p);
            for deg in [axis, axis + 180.0] {
                self.clamp_cells.push(self.grid.cell_of(deg));
            }
        }
        self.clamp_cells.sort_unstable();
        self.clamp_cells.dedup();
        self
    }

    pub fn add_vote(&mut self, deg: f64) {
        let cell = self.grid.cell_of(deg);
        self.histogram[cell] += 1;
    }

    /// One vote per valid voting bin of a dual frame.
    pub fn add_dual_frame(
        &mut self,
        frame_a: &[C64],
        frame_b: &[C64],
        fs: u32,
        fft_size: usize,
        spacing_m: f64,
        c: f64,
    ) {
        let hz_per_bin = fs as f64 / fft_size as f64;
        for k in voting_bins(fs, fft_size, spacing_m, c) {
            let y = frame_a[k] * frame_b[k].conj();
            if y.norm() < PHASE_VALID_EPS {
                continue;
            }
            self.add_vote(theta_from_phase(y.arg(), k as f64 * hz_per_bin, spacing_m, c));
        }
    }

    /// Two votes (estimate and mirror) per pair per valid voting bin of a
    /// circular frame.
    pub fn add_circular_frame(
        &mut self,
        frame: &[Vec<C64>],
        fs: u32,
        fft_size: usize,
        geometry: &ArrayGeometry,
        c: f64,
    ) {
        let hz_per_bin = fs as f64 / fft_size as f64;
        let spacing = geometry.spacing();
        for (idx, &(a, b)) in geometry.pairs().iter().enumerate() {
            let axis = geometry.pair_axis(idx);
            for k in voting_bins(fs, fft_size, spacing, c) {
                let y = frame[a][k] * frame[b][k].conj();
                if y.norm() < PHASE_VALID_EPS {
                    continue;
                }
                let theta = theta_from_phase(y.arg(), k as f64 * hz_per_bin, spacing, c);
                let front = local_to_azimuth(axis, theta);
                self.add_vote(front);
                self.add_vote(mirror_azimuth(axis, front));
            }
        }
    }

    pub fn n_votes(&self) -> u64 {
        self.histogram.iter().sum()
    }

    pub fn estimate(&self) -> Result<DoaEstimate, SslError> {
        let n_votes = self.n_votes();
        if n_votes == 0 {
            return Err(SslError::NoVotes);
        }
        let mut best = 0;
        for (i, &count) in self.histogram.iter().enumerate() {
            if count > self.histogram[best] {
                best = i;
            }
        }
        let second_count = self
            .histogram
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.distance(*i, best) >= MIN_PEAK_SEPARATION_CELLS)
            .map(|(_, &c)| c)
            .max()
            .unwrap_or(0);
        let peak_count = self.histogram[best];
        let azimuth_deg = if self.grid.circular {
            self.cluster_center()
        } else {
            self.grid.center(best)
        };
        Ok(DoaEstimate {
            azimuth_deg,
            histogram: self.histogram.clone(),
            n_votes,
            peak_count,
            second_count,
            gap: peak_count - second_count,
            grid: self.grid,
        })
    }

    /// Center of the strongest cluster on a wraparound grid: the window of
    /// CLUSTER_WINDOW_CELLS cells with the largest vote sum, reduced to the
    /// vote-weighted circular mean of its cells. Clamp cells are capped at
    /// their taller neighbor first (only when that neighbor is populated,
    /// so an exactly on-axis noiseless source keeps its single-cell spike):
    /// the funnel artifact is a lone spike, while a genuine cluster always
    /// fills neighboring cells too.
    fn cluster_center(&self) -> f64 {
        let n = self.histogram.len();
        let mut eff: Vec<f64> = self.histogram.iter().map(|&c| c as f64).collect();
        for &cell in &self.clamp_cells {
            let shoulder = eff[(cell + n - 1) % n].max(eff[(cell + 1) % n]);
            if shoulder > 0.0 && eff[cell] > shoulder {
                eff[cell] = shoulder;
            }
        }
        let w = CLUSTER_WINDOW_CELLS.min(n);
        let half = (w / 2) as i64;
        let mut best_start = 0usize;
        let mut best_sum = f64::NEG_INFINITY;
        for start in 0..n {
            let sum: f64 = (0..w).map(|d| eff[(start + d) % n]).sum();
            if sum > best_sum {
                best_sum = sum;
                best_start = start;
            }
        }
        let center = best_start as i64 + half;
        let (mut x, mut y) = (0.0, 0.0);
        for d in -half..=half {
            let cell = (center + d).rem_euclid(n as i64) as usize;
            let rad = self.grid.center(cell).to_radians();
            x += eff[cell] * rad.cos();
            y += eff[cell] * rad.sin();
        }
        if x == 0.0 && y == 0.0 {
            return self.grid.center(center.rem_euclid(n as i64) as usize);
        }
        crate::geometry::wrap_deg_360(y.atan2(x).to_degrees())
    }
}

/// Localize with a dual pair over all frames of a 2-channel spectrogram.
/// The estimate is the pair-local broadside angle in degrees.
pub fn dual_doa(
    spec: &Spectrogram,
    spacing_m: f64,
    c: f64,
    grid_step_deg: f64,
) -> Result<DoaEstimate, SslError> {
    if spec.num_channels() != 2 {
        return Err(SslError::BadChannels {
            got: spec.num_channels(),
            expected: 2,
        });
    }
    let mut acc = VoteAccumulator::new(VoteGrid::dual(grid_step_deg));
    for t in 0..spec.num_frames() {
        acc.add_dual_frame(
            spec.channel_frame(t, 0),
            spec.channel_frame(t, 1),
            spec.fs(),
            spec.config().fft_size,
            spacing_m,
            c,
        );
    }
    acc.estimate()
}

/// Localize with every pair of a circular array over all frames. The
/// estimate is a global azimuth in [0, 360).
pub fn circular_doa(
    spec: &Spectrogram,
    geometry: &ArrayGeometry,
    c: f64,
    grid_step_deg: f64,
) -> Result<DoaEstimate, SslError> {
    if geometry.pairs().len() < 2 {
        return Err(SslError::NotCircular);
    }
    if spec.num_channels() != geometry.n_mics() {
        return Err(SslError::BadChannels {
            got: spec.num_channels(),
            expected: geometry.n_mics(),
        });
    }
    let mut acc =
        VoteAccumulator::new(VoteGrid::full_circle(grid_step_deg)).with_clamp_cells(geometry);
    for t in 0..spec.num_frames() {
        acc.add_circular_frame(
            spec.frame(t),
            spec.fs(),
            spec.config().fft_size,
            geometry,
            c,
        );
    }
    acc.estimate()
}
