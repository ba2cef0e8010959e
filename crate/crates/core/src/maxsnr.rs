//! Adaptive max-SNR beamforming on a two-channel pair.
//!
//! Per frame: classify bins as target- or interference-dominated by their
//! residual phase around the estimated DOA, turn the two band energies
//! into contrast weights, accumulate two weighted covariance matrices per
//! bin, and take the generalized eigenvector that maximizes the ratio of
//! the target-tracking matrix over the interference-tracking one. The
//! beam width of the classifier adapts to how decisive the DOA histogram
//! was (its peak gap) through a clamped exponential.

use thiserror::Error;

use crate::dsp::{istft, DspError, MultichannelSignal, Spectrogram};
use crate::geometry::{aliasing_limit_hz, phase_difference, wrap_rad, ArrayGeometry, SPEED_OF_SOUND};
use crate::gevd::{normalize_distortionless, solve_gevd, Herm2};
use crate::pairsel::{align_pair, select_pair, PairError};
use crate::ssl::{
    circular_doa, dual_doa, DoaEstimate, SslError, VoteAccumulator, VoteGrid,
    CIRCULAR_GRID_STEP_DEG, DUAL_GRID_STEP_DEG, PHASE_VALID_EPS, VOTE_BAND_LOW_HZ,
};
use crate::C64;

/// Default covariance smoothing: about a 400 ms time constant at the
/// default 16 ms hop.
pub const DEFAULT_BETA: f64 = 0.96;

/// Beamwidth at and below the lower gap knee.
pub const BEAMWIDTH_MAX_DEG: f64 = 60.0;

/// Decay constant of the beamwidth mapping over [N/5, N/2].
pub const EDF_DECAY: f64 = 3.0;

/// Energies at or below this floor share one contrast weight, keeping the
/// weight finite through silent frames.
pub const CONTRAST_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BeamformError {
    #[error(transparent)]
    Ssl(#[from] SslError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error("expected a 2-channel spectrogram, got {0} channels")]
    NotDual(usize),
}

/// Classification beamwidth in degrees for a DOA histogram with peak gap
/// `gap` out of `n_votes` total votes. 60 degrees at or below a gap of
/// N/5, decaying exponentially to 60 e^-3 (about 3 degrees) at N/2 and
/// clamped there; monotone non-increasing in the gap.
pub fn adaptive_beamwidth(gap: f64, n_votes: f64) -> f64 {
    if n_votes <= 0.0 {
        return BEAMWIDTH_MAX_DEG;
    }
    let lo = n_votes / 5.0;
    let hi = n_votes / 2.0;
    let g = gap.clamp(lo, hi);
    BEAMWIDTH_MAX_DEG * (-EDF_DECAY * (g - lo) / (hi - lo)).exp()
}

/// Disjoint bin index sets; bins outside the classified band (below the
/// low band edge, above the aliasing limit, or without usable phase)
/// appear in neither.
#[derive(Debug, Clone, Default)]
pub struct BinPartition {
    pub target: Vec<usize>,
    pub interference: Vec<usize>,
}

/// Split the classifiable bins of a dual frame around the expected phase
/// of a source at `theta_hat_deg`. A bin joins the target set when the
/// cosine of its residual phase reaches the cosine of the frequency's
/// phase tolerance, which is the phase shift a source `beamwidth/2` off
/// the DOA would add.
pub fn classify_bins(
    frame_a: &[C64],
    frame_b: &[C64],
    fs: u32,
    fft_size: usize,
    theta_hat_deg: f64,
    beamwidth_deg: f64,
    spacing_m: f64,
    c: f64,
) -> BinPartition {
    let hz_per_bin = fs as f64 / fft_size as f64;
    let alias = aliasing_limit_hz(spacing_m, c);
    let lo = (VOTE_BAND_LOW_HZ / hz_per_bin).ceil() as usize;
    let hi = ((alias / hz_per_bin).floor() as usize).min(fft_size / 2);
    let half_width = (beamwidth_deg / 2.0).to_radians().sin();
    let mut partition = BinPartition::default();
    for k in lo..=hi {
        let y = frame_a[k] * frame_b[k].conj();
        if y.norm() < PHASE_VALID_EPS {
            continue;
        }
        let f = k as f64 * hz_per_bin;
        let expected = phase_difference(f, spacing_m, theta_hat_deg, c);
        let psi = wrap_rad(y.arg() - expected);
        let tol = (2.0 * std::f64::consts::PI * f * spacing_m / c * half_width).min(std::f64::consts::PI);
        if psi.cos() >= tol.cos() {
            partition.target.push(k);
        } else {
            partition.interference.push(k);
        }
    }
    partition
}

/// Sharpen a grid-quantized DOA by regressing the inter-channel phase of
/// target-classified bins on frequency. The vote grid floors the
/// estimate's resolution at half a cell, and the weights inherit that
/// error through the steering model: near the top of the band a degree of
/// model error moves a broadside-steered pair's response to an off-axis
/// source by several dB. The regression recovers the sub-cell remainder
/// from the phases themselves: magnitude-weighted least squares of the
/// residual phase against `2 pi f d / c`, which estimates the offset in
/// sine terms. Classified bins already sit inside the phase tolerance, so
/// no wrap handling is needed. Returns `theta_deg` unchanged when nothing
/// classifies as target.
pub fn refine_theta(
    spec: &Spectrogram,
    spacing_m: f64,
    theta_deg: f64,
    beamwidth_deg: f64,
    c: f64,
) -> f64 {
    let fs = spec.fs();
    let fft_size = spec.config().fft_size;
    let hz_per_bin = fs as f64 / fft_size as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for t in 0..spec.num_frames() {
        let a = spec.channel_frame(t, 0);
        let b = spec.channel_frame(t, 1);
        let partition = classify_bins(a, b, fs, fft_size, theta_deg, beamwidth_deg, spacing_m, c);
        for &k in &partition.target {
            let y = a[k] * b[k].conj();
            let f = k as f64 * hz_per_bin;
            let psi = wrap_rad(y.arg() - phase_difference(f, spacing_m, theta_deg, c));
            let x = 2.0 * std::f64::consts::PI * f * spacing_m / c;
            let w = y.norm();
            num += w * x * psi;
            den += w * x * x;
        }
    }
    if den <= 0.0 {
        return theta_deg;
    }
    let s = (theta_deg.to_radians().sin() + num / den).clamp(-1.0, 1.0);
    s.asin().to_degrees()
}

/// Frame energies of the two sets: the target set summed on the first
/// channel, the interference set on the second.
pub fn band_energies(frame_a: &[C64], frame_b: &[C64], partition: &BinPartition) -> (f64, f64) {
    let e_t = partition.target.iter().map(|&k| frame_a[k].norm_sqr()).sum();
    let e_i = partition
        .interference
        .iter()
        .map(|&k| frame_b[k].norm_sqr())
        .sum();
    (e_t, e_i)
}

/// Covariance weight of a frame with band energy `e`: `2 / (3 e^{2/3})`,
/// floored at [`CONTRAST_FLOOR`]. Strictly decreasing above the floor, so
/// frames where a component is quiet dominate that component's matrix.
pub fn contrast_weight(e: f64) -> f64 {
    2.0 / (3.0 * e.max(CONTRAST_FLOOR).powf(2.0 / 3.0))
}

/// Per-bin pair of smoothed weighted covariances. V1 is weighted by the
/// target-energy contrast (so it averages the frames where the target is
/// weak and ends up tracking the interference); V2 is weighted by the
/// interference-energy contrast and tracks the target.
#[derive(Debug, Clone)]
pub struct CovarianceTracker {
    v1: Vec<Herm2>,
    v2: Vec<Herm2>,
    beta: f64,
}

impl CovarianceTracker {
    pub fn new(bins: usize, beta: f64) -> Self {
        Self {
            v1: vec![Herm2::zero(); bins],
            v2: vec![Herm2::zero(); bins],
            beta,
        }
    }

    pub fn bins(&self) -> usize {
        self.v1.len()
    }

    pub fn v1(&self) -> &[Herm2] {
        &self.v1
    }

    pub fn v2(&self) -> &[Herm2] {
        &self.v2
    }

    /// Fold in one frame with the two contrast weights already computed
    /// from its band energies.
    pub fn update(&mut self, frame_a: &[C64], frame_b: &[C64], w_target: f64, w_interf: f64) {
        for (k, (a, b)) in frame_a.iter().zip(frame_b).enumerate() {
            let x = [*a, *b];
            self.v1[k] = self.v1[k].smoothed(&Herm2::outer(x, w_target), self.beta);
            self.v2[k] = self.v2[k].smoothed(&Herm2::outer(x, w_interf), self.beta);
        }
    }
}

/// Per-bin filter weights plus the generalized eigenvalue they came from.
#[derive(Debug, Clone)]
pub struct BeamWeights {
    pub w: Vec<[C64; 2]>,
    pub lambda: Vec<f64>,
}

/// Norm ceiling on an adaptive weight, as a multiple of the fixed beam's
/// norm at the same bin. Past this the weight amplifies spatially white
/// noise by more than 18 dB over the fixed beam, and its response swings
/// so fast across one bin's bandwidth that resynthesis turns the swing
/// into artifacts.
pub const WEIGHT_NORM_CAP: f64 = 8.0;

/// Solve the per-bin pencil and rescale each eigenvector to unit response
/// toward `steering(k)`. The target extractor is the principal eigenvector
/// of (V2, V1): V2 follows the target and V1 the interference, so that
/// ratio is the one to maximize.
///
/// The extractor is kept only when it earns its keep. Both candidates
/// have unit target response, so their quadratic response through V1
/// compares pure non-target leakage: an eigenvector that responds to the
/// interference tracker more strongly than the fixed beam is a noise
/// direction from a near-proportional pencil, not a null. Such bins, bins
/// whose eigenvector nulls the steering direction, and bins whose rescaled
/// norm exceeds `WEIGHT_NORM_CAP` times the fixed beam's keep the fixed
/// beam instead.
pub fn compute_weights(
    tracker: &CovarianceTracker,
    steering: impl Fn(usize) -> [C64; 2],
) -> BeamWeights {
    let bins = tracker.bins();
    let mut w = Vec::with_capacity(bins);
    let mut lambda = Vec::with_capacity(bins);
    for k in 0..bins {
        let sol = solve_gevd(&tracker.v2[k], &tracker.v1[k]);
        let s = steering(k);
        let fb = fixed_beam(s);
        let weight = match normalize_distortionless(sol.w, s) {
            Some(wa) => {
                // probe hook, remove
                let blend: bool = std::env::var("MABEAM_BLEND").is_ok();
                if blend {
                    let qa = tracker.v1[k].quad(wa);
                    let qf = tracker.v1[k].quad(fb);
                    let r = if qf > 0.0 { qa / qf } else { f64::INFINITY };
                    let r0: f64 = std::env::var("MABEAM_R0")
                        .ok()
                        .and_then(|v| v.parse().ok())
                        .unwrap_or(0.0);
                    let mut alpha = ((1.0 - r) / (1.0 - r0)).clamp(0.0, 1.0);
                    let cap2 = WEIGHT_NORM_CAP * WEIGHT_NORM_CAP * norm2(fb);
                    let mix = |a: f64| -> [C64; 2] {
                        [
                            wa[0] * a + fb[0] * (1.0 - a),
                            wa[1] * a + fb[1] * (1.0 - a),
                        ]
                    };
                    if norm2(mix(alpha)) > cap2 {
                        // largest alpha in [0,1] keeping the blend under the cap
                        let mut lo = 0.0f64;
                        let mut hi = alpha;
                        for _ in 0..40 {
                            let mid = 0.5 * (lo + hi);
                            if norm2(mix(mid)) <= cap2 {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        alpha = lo;
                    }
                    mix(alpha)
                } else {
                    let norm_ok = norm2(wa) <= WEIGHT_NORM_CAP * WEIGHT_NORM_CAP * norm2(fb);
                    let suppresses = tracker.v1[k].quad(wa) <= tracker.v1[k].quad(fb);
                    if norm_ok && suppresses {
                        wa
                    } else {
                        fb
                    }
                }
            }
            None => fb,
        };
        w.push(weight);
        lambda.push(sol.lambda);
    }
    BeamWeights { w, lambda }
}

fn norm2(w: [C64; 2]) -> f64 {
    w[0].norm_sqr() + w[1].norm_sqr()
}

/// Distortionless non-adaptive beam toward `s`: `w = s / ||s||^2`.
pub fn fixed_beam(s: [C64; 2]) -> [C64; 2] {
    let n = s[0].norm_sqr() + s[1].norm_sqr();
    [s[0] / n, s[1] / n]
}

/// `y_k = w_k^H x_k` per bin over two selected channels, as a mono
/// spectrogram ready for resynthesis.
pub fn apply_weights(
    spec: &Spectrogram,
    ch_a: usize,
    ch_b: usize,
    weights: &BeamWeights,
) -> Result<Spectrogram, DspError> {
    let bins = spec.bins();
    if weights.w.len() != bins {
        return Err(DspError::BinCountMismatch {
            got: weights.w.len(),
            expected: bins,
        });
    }
    let frames = (0..spec.num_frames())
        .map(|t| {
            let a = spec.channel_frame(t, ch_a);
            let b = spec.channel_frame(t, ch_b);
            let y = weights
                .w
                .iter()
                .zip(a.iter().zip(b))
                .map(|(w, (xa, xb))| w[0].conj() * xa + w[1].conj() * xb)
                .collect();
            vec![y]
        })
        .collect();
    Spectrogram::from_frames(spec.fs(), *spec.config(), frames)
}

#[derive(Debug, Clone)]
pub struct BeamformConfig {
    pub beta: f64,
    /// Bypass the adaptive beamwidth with a fixed value.
    pub fixed_beamwidth_deg: Option<f64>,
    /// Adapt and filter frame by frame instead of accumulating over the
    /// whole utterance first. Offline is the default: it makes evaluation
    /// runs independent of utterance-initial adaptation.
    pub online: bool,
    pub grid_step_deg: f64,
    pub c: f64,
}

impl Default for BeamformConfig {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            fixed_beamwidth_deg: None,
            online: false,
            grid_step_deg: DUAL_GRID_STEP_DEG,
            c: SPEED_OF_SOUND,
        }
    }
}

/// Per-frame diagnostics of a pipeline run.
#[derive(Debug, Clone)]
pub struct FrameDiag {
    pub frame: usize,
    /// Pair-local DOA the frame was classified against.
    pub doa_deg: f64,
    pub gap: u64,
    pub n_votes: u64,
    pub beamwidth_deg: f64,
    pub e_t: f64,
    pub e_i: f64,
    /// Generalized eigenvalue at the bin nearest 1 kHz.
    pub lambda_1k: f64,
}

#[derive(Debug)]
pub struct BeamformOutput {
    /// Mono resynthesized beamformer output.
    pub output: MultichannelSignal,
    /// The weights applied to the final frame (offline: to every frame).
    pub weights: BeamWeights,
    pub doa: DoaEstimate,
    pub diags: Vec<FrameDiag>,
}

enum LocalizationMode {
    /// DOA, gap, and vote count fixed up front (dual offline, or a
    /// circular estimate handed down with an aligned pair).
    Fixed(DoaEstimate),
    /// Re-estimate from the running histogram each frame.
    Running,
}

/// Steering model of the pair: `MicZero` references the first channel
/// (raw dual input); `Center` references the pair midpoint with the
/// half-amplitude entries of the alignment convention (input already
/// aligned, DOA model at 0 degrees); `Aligned` is the model for a pair
/// whose channels were aligned for a source at `theta_local_deg`, with
/// the alignment's half-delay phase kept in the model so the unit
/// response stays referenced to the first microphone's clock. The
/// midpoint reference instead puts a fractional-delay ramp on the
/// output spectrum; the target survives resynthesis under that ramp
/// but the nulled residual roughly triples, so the oracle-visible SINR
/// drops even though per-bin ratios are identical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteeringRef {
    MicZero,
    Center,
    Aligned { theta_local_deg: f64 },
}

/// Steering vector of the pair under the chosen reference convention.
pub fn pair_steering(
    mode: SteeringRef,
    f_hz: f64,
    spacing_m: f64,
    theta_deg: f64,
    c: f64,
) -> [C64; 2] {
    let phi = phase_difference(f_hz, spacing_m, theta_deg, c);
    match mode {
        SteeringRef::MicZero => [C64::new(1.0, 0.0), C64::from_polar(1.0, -phi)],
        SteeringRef::Center => [
            C64::from_polar(0.5, 0.5 * phi),
            C64::from_polar(0.5, -0.5 * phi),
        ],
        SteeringRef::Aligned { theta_local_deg } => {
            let phi_a = phase_difference(f_hz, spacing_m, theta_local_deg, c);
            [
                C64::from_polar(0.5, 0.5 * (phi - phi_a)),
                C64::from_polar(0.5, -0.5 * (phi + phi_a)),
            ]
        }
    }
}

/// Full pipeline on a 2-channel spectrogram with the localization result
/// supplied by the caller. `theta_model_deg` is the source angle in this
/// pair's local frame (0 for an aligned circular pair); `doa` supplies the
/// gap and vote count that set the classification beamwidth.
pub fn beamform_with_estimate(
    spec: &Spectrogram,
    spacing_m: f64,
    theta_model_deg: f64,
    doa: &DoaEstimate,
    steering_ref: SteeringRef,
    cfg: &BeamformConfig,
) -> Result<BeamformOutput, BeamformError> {
    run_pipeline(
        spec,
        spacing_m,
        LocalizationMode::Fixed(doa.clone()),
        Some(theta_model_deg),
        steering_ref,
        cfg,
    )
}

/// Localize with the pair itself, then run the pipeline. Offline mode
/// estimates the DOA from the whole utterance before filtering; online
/// mode tracks a running histogram frame by frame.
pub fn beamform_dual(
    spec: &Spectrogram,
    spacing_m: f64,
    cfg: &BeamformConfig,
) -> Result<BeamformOutput, BeamformError> {
    if spec.num_channels() != 2 {
        return Err(BeamformError::NotDual(spec.num_channels()));
    }
    if cfg.online {
        run_pipeline(
            spec,
            spacing_m,
            LocalizationMode::Running,
            None,
            SteeringRef::MicZero,
            cfg,
        )
    } else {
        let doa = dual_doa(spec, spacing_m, cfg.c, cfg.grid_step_deg)?;
        let theta = doa.azimuth_deg;
        run_pipeline(
            spec,
            spacing_m,
            LocalizationMode::Fixed(doa),
            Some(theta),
            SteeringRef::MicZero,
            cfg,
        )
    }
}

/// Pair pipeline result plus the selection that produced it, so callers
/// can reproduce the alignment on other signals.
#[derive(Debug)]
pub struct CircularBeamformOutput {
    /// Result of the pair pipeline on the aligned channels. Its `doa` is
    /// the pair's own local estimate, near zero when the global estimate
    /// was accurate.
    pub pair: BeamformOutput,
    /// Whole-array estimate that drove pair selection.
    pub global_doa: DoaEstimate,
    pub pair_index: usize,
    /// Global estimate folded into the selected pair's frame; the angle
    /// the alignment compensated.
    pub theta_local_deg: f64,
}

/// Full circular pipeline: localize on the whole array, pick and align
/// the nearest diametric pair, then run the pair pipeline on the aligned
/// channels. The pair re-localizes itself, so the classification
/// beamwidth comes from a histogram with the same cell size and votes per
/// bin as the dual path; the global estimate only drives selection and
/// alignment.
pub fn beamform_circular(
    spec: &Spectrogram,
    geometry: &ArrayGeometry,
    cfg: &BeamformConfig,
) -> Result<CircularBeamformOutput, BeamformError> {
    let global_doa = circular_doa(spec, geometry, cfg.c, CIRCULAR_GRID_STEP_DEG)?;
    let (pair_index, theta_local_deg) = select_pair(global_doa.azimuth_deg, geometry);
    let aligned = align_pair(spec, pair_index, theta_local_deg, geometry, cfg.c)?;
    let spacing = geometry.spacing();
    let steering = SteeringRef::Aligned { theta_local_deg };
    let pair = if cfg.online {
        run_pipeline(
            &aligned,
            spacing,
            LocalizationMode::Running,
            None,
            steering,
            cfg,
        )?
    } else {
        let doa = dual_doa(&aligned, spacing, cfg.c, cfg.grid_step_deg)?;
        let theta = doa.azimuth_deg;
        run_pipeline(
            &aligned,
            spacing,
            LocalizationMode::Fixed(doa),
            Some(theta),
            steering,
            cfg,
        )?
    };
    Ok(CircularBeamformOutput {
        pair,
        global_doa,
        pair_index,
        theta_local_deg,
    })
}

fn run_pipeline(
    spec: &Spectrogram,
    spacing_m: f64,
    mode: LocalizationMode,
    theta_model_deg: Option<f64>,
    steering_ref: SteeringRef,
    cfg: &BeamformConfig,
) -> Result<BeamformOutput, BeamformError> {
    if spec.num_channels() != 2 {
        return Err(BeamformError::NotDual(spec.num_channels()));
    }
    let fs = spec.fs();
    let fft_size = spec.config().fft_size;
    let bins = spec.bins();
    let hz_per_bin = fs as f64 / fft_size as f64;
    let bin_1k = (1000.0 / hz_per_bin).round() as usize;

    let mut tracker = CovarianceTracker::new(bins, cfg.beta);
    let mut votes = VoteAccumulator::new(VoteGrid::dual(cfg.grid_step_deg));
    let mut diags = Vec::with_capacity(spec.num_frames());
    let mut online_frames: Vec<Vec<Vec<C64>>> = Vec::new();
    let mut last_weights: Option<BeamWeights> = None;
    let mut final_doa = match &mode {
        LocalizationMode::Fixed(doa) => doa.clone(),
        LocalizationMode::Running => DoaEstimate {
            azimuth_deg: 0.0,
            histogram: vec![0; VoteGrid::dual(cfg.grid_step_deg).cells],
            n_votes: 0,
            peak_count: 0,
            second_count: 0,
            gap: 0,
            grid: VoteGrid::dual(cfg.grid_step_deg),
        },
    };

    // A fixed estimate carries up to half a grid cell of quantization;
    // offline the whole utterance is available, so sharpen it before the
    // model is used anywhere. Online stays causal and keeps the raw grid
    // value.
    let refined_model = match &mode {
        LocalizationMode::Fixed(doa) if !cfg.online => {
            let theta0 = theta_model_deg.unwrap_or(doa.azimuth_deg);
            let bw = cfg
                .fixed_beamwidth_deg
                .unwrap_or_else(|| adaptive_beamwidth(doa.gap as f64, doa.n_votes as f64));
            Some(refine_theta(spec, spacing_m, theta0, bw, cfg.c))
        }
        _ => None,
    };

    for t in 0..spec.num_frames() {
        let a = spec.channel_frame(t, 0);
        let b = spec.channel_frame(t, 1);

        let (theta, gap, n_votes) = match &mode {
            LocalizationMode::Fixed(doa) => (
                refined_model.unwrap_or_else(|| theta_model_deg.unwrap_or(doa.azimuth_deg)),
                doa.gap,
                doa.n_votes,
            ),
            LocalizationMode::Running => {
                votes.add_dual_frame(a, b, fs, fft_size, spacing_m, cfg.c);
                match votes.estimate() {
                    Ok(doa) => {
                        let out = (doa.azimuth_deg, doa.gap, doa.n_votes);
                        final_doa = doa;
                        out
                    }
                    // Nothing voted yet: classify wide open at broadside.
                    Err(SslError::NoVotes) => (0.0, 0, 0),
                    Err(e) => return Err(e.into()),
                }
            }
        };
        let beamwidth = cfg
            .fixed_beamwidth_deg
            .unwrap_or_else(|| adaptive_beamwidth(gap as f64, n_votes as f64));

        let partition =
            classify_bins(a, b, fs, fft_size, theta, beamwidth, spacing_m, cfg.c);
        let (e_t, e_i) = band_energies(a, b, &partition);
        tracker.update(a, b, contrast_weight(e_t), contrast_weight(e_i));

        let lambda_1k = solve_gevd(&tracker.v2()[bin_1k], &tracker.v1()[bin_1k]).lambda;
        diags.push(FrameDiag {
            frame: t,
            doa_deg: theta,
            gap,
            n_votes,
            beamwidth_deg: beamwidth,
            e_t,
            e_i,
            lambda_1k,
        });

        if cfg.online {
            let weights = compute_weights(&tracker, |k| {
                pair_steering(steering_ref, k as f64 * hz_per_bin, spacing_m, theta, cfg.c)
            });
            let y: Vec<C64> = weights
                .w
                .iter()
                .zip(a.iter().zip(b))
                .map(|(w, (xa, xb))| w[0].conj() * xa + w[1].conj() * xb)
                .collect();
            online_frames.push(vec![y]);
            last_weights = Some(weights);
        }
    }

    if let LocalizationMode::Running = mode {
        if final_doa.n_votes == 0 {
            return Err(SslError::NoVotes.into());
        }
    }

    let theta_final =
        refined_model.unwrap_or_else(|| theta_model_deg.unwrap_or(final_doa.azimuth_deg));
    let (weights, mono) = if cfg.online {
        let weights = last_weights.expect("online mode saw at least one frame");
        let spec_out = Spectrogram::from_frames(fs, *spec.config(), online_frames)?;
        (weights, spec_out)
    } else {
        let weights = compute_weights(&tracker, |k| {
            pair_steering(
                steering_ref,
                k as f64 * hz_per_bin,
                spacing_m,
                theta_final,
                cfg.c,
            )
        });
        let spec_out = apply_weights(spec, 0, 1, &weights)?;
        (weights, spec_out)
    };
    let output = istft(&mono)?;
    Ok(BeamformOutput {
        output,
        weights,
        doa: final_doa,
        diags,
    })
}
