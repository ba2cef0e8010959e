//! SINR measurement and the synthetic sweep harness.
//!
//! Output SINR is measured by shadow filtering: the weights derived from
//! the mixture are applied unchanged to the clean target and the clean
//! interference-plus-noise streams of the same render, and the ratio of
//! the two resynthesized energies is taken in the time domain. This is
//! the only way to attribute output power unambiguously when the filter
//! output mixes both components.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dsp::{istft, mean_power, stft, DspError, Spectrogram, StftConfig};
use crate::geometry::{ArrayGeometry, GeometryError};
use crate::maxsnr::{
    apply_weights, beamform_dual, beamform_with_estimate, fixed_beam, pair_steering,
    BeamWeights, BeamformConfig, BeamformError, SteeringRef,
};
use crate::pairsel::{align_pair, select_pair, PairError};
use crate::scenesim::{render_scene, Scene, SceneError, SignalKind, SourceSpec, RenderedScene};
use crate::ssl::{circular_doa, dual_doa, SslError, CIRCULAR_GRID_STEP_DEG};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("degenerate shadow measurement: filtered target and interference both silent")]
    Degenerate,
    #[error(transparent)]
    Beamform(#[from] BeamformError),
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

impl From<SslError> for EvalError {
    fn from(e: SslError) -> Self {
        EvalError::Beamform(BeamformError::Ssl(e))
    }
}

/// Apply `weights` to the two component spectrograms of one render and
/// return `10 log10` of the filtered target-to-interference energy ratio.
/// Infinite when the filtered interference is silent; both silent is an
/// error.
pub fn shadow_sinr_db(
    weights: &BeamWeights,
    target: &Spectrogram,
    interf_noise: &Spectrogram,
) -> Result<f64, EvalError> {
    let y_t = istft(&apply_weights(target, 0, 1, weights)?)?;
    let y_v = istft(&apply_weights(interf_noise, 0, 1, weights)?)?;
    let p_t = mean_power(y_t.channel(0));
    let p_v = mean_power(y_v.channel(0));
    if p_t <= 0.0 && p_v <= 0.0 {
        return Err(EvalError::Degenerate);
    }
    if p_v <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (p_t / p_v).log10())
}

/// Fixed delay-and-sum weights toward `theta_hat_deg`: `w = s / ||s||^2`
/// at every bin, distortionless and non-adaptive.
pub fn ds_baseline(
    bins: usize,
    fs: u32,
    fft_size: usize,
    spacing_m: f64,
    theta_hat_deg: f64,
    steering_ref: SteeringRef,
    c: f64,
) -> BeamWeights {
    let hz_per_bin = fs as f64 / fft_size as f64;
    let w = (0..bins)
        .map(|k| {
            fixed_beam(pair_steering(
                steering_ref,
                k as f64 * hz_per_bin,
                spacing_m,
                theta_hat_deg,
                c,
            ))
        })
        .collect::<Vec<_>>();
    let lambda = vec![0.0; bins];
    BeamWeights { w, lambda }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MaxSnr,
    DelaySum,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::MaxSnr => "maxsnr",
            Method::DelaySum => "ds",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayKind {
    /// Standalone two-mic array.
    Dual,
    /// Full circular pipeline: localization, pair selection, alignment.
    Circular,
    /// The circle's first diametric pair treated as a raw dual array;
    /// the two-mic comparator the circular results are judged against.
    CirclePair,
}

impl ArrayKind {
    pub fn label(&self) -> &'static str {
        match self {
            ArrayKind::Dual => "dual",
            ArrayKind::Circular => "circular",
            ArrayKind::CirclePair => "circle-pair",
        }
    }
}

/// One gain measurement with its intermediate quantities.
#[derive(Debug, Clone)]
pub struct GainBreakdown {
    pub input_sinr_db: f64,
    pub output_sinr_db: f64,
    pub gain_db: f64,
    /// Dual: pair-local angle. Circular: global azimuth.
    pub doa_deg: f64,
}

/// Gain of one method on a rendered 2-channel scene.
pub fn sinr_gain_dual(
    rendered: &RenderedScene,
    spacing_m: f64,
    method: Method,
    stft_cfg: &StftConfig,
    cfg: &BeamformConfig,
) -> Result<GainBreakdown, EvalError> {
    let spec = stft(&rendered.mixture, stft_cfg)?;
    let spec_t = stft(&rendered.target_only, stft_cfg)?;
    let spec_v = stft(&rendered.interference_plus_noise_only, stft_cfg)?;
    let (weights, doa_deg) = match method {
        Method::MaxSnr => {
            let out = beamform_dual(&spec, spacing_m, cfg)?;
            let doa = out.doa.azimuth_deg;
            (out.weights, doa)
        }
        Method::DelaySum => {
            let doa = dual_doa(&spec, spacing_m, cfg.c, cfg.grid_step_deg)?;
            let weights = ds_baseline(
                spec.bins(),
                spec.fs(),
                stft_cfg.fft_size,
                spacing_m,
                doa.azimuth_deg,
                SteeringRef::MicZero,
                cfg.c,
            );
            (weights, doa.azimuth_deg)
        }
    };
    let input = rendered.measured_input_sinr_db();
    let output = shadow_sinr_db(&weights, &spec_t, &spec_v)?;
    Ok(GainBreakdown {
        input_sinr_db: input,
        output_sinr_db: output,
        gain_db: output - input,
        doa_deg,
    })
}

/// Gain of one method on a rendered circular scene: localize on all
/// pairs, select and align the best one, then run the pair pipeline on
/// the aligned channels. The aligned pair re-localizes itself, which
/// puts its classification statistics on the pair grid and catches any
/// residual misalignment. The shadow components get the identical
/// selection and alignment.
pub fn sinr_gain_circular(
    rendered: &RenderedScene,
    geometry: &ArrayGeometry,
    method: Method,
    stft_cfg: &StftConfig,
    cfg: &BeamformConfig,
) -> Result<GainBreakdown, EvalError> {
    let spec = stft(&rendered.mixture, stft_cfg)?;
    let doa = circular_doa(&spec, geometry, cfg.c, CIRCULAR_GRID_STEP_DEG)?;
    let (pair_idx, theta_local) = select_pair(doa.azimuth_deg, geometry);
    let aligned = align_pair(&spec, pair_idx, theta_local, geometry, cfg.c)?;
    let aligned_t = align_pair(
        &stft(&rendered.target_only, stft_cfg)?,
        pair_idx,
        theta_local,
        geometry,
        cfg.c,
    )?;
    let aligned_v = align_pair(
        &stft(&rendered.interference_plus_noise_only, stft_cfg)?,
        pair_idx,
        theta_local,
        geometry,
        cfg.c,
    )?;
    let spacing = geometry.spacing();
    let pair_doa = dual_doa(&aligned, spacing, cfg.c, cfg.grid_step_deg)?;
    let steering = SteeringRef::Aligned {
        theta_local_deg: theta_local,
    };
    let weights = match method {
        Method::MaxSnr => beamform_with_estimate(
            &aligned,
            spacing,
            pair_doa.azimuth_deg,
            &pair_doa,
            steering,
            cfg,
        )?
        .weights,
        Method::DelaySum => ds_baseline(
            aligned.bins(),
            aligned.fs(),
            stft_cfg.fft_size,
            spacing,
            pair_doa.azimuth_deg,
            steering,
            cfg.c,
        ),
    };
    let input = rendered.measured_input_sinr_db();
    let output = shadow_sinr_db(&weights, &aligned_t, &aligned_v)?;
    Ok(GainBreakdown {
        input_sinr_db: input,
        output_sinr_db: output,
        gain_db: output - input,
        doa_deg: doa.azimuth_deg,
    })
}

/// Gain of one method on the circle's first diametric pair, run as a raw
/// dual array with the circle diameter as spacing.
pub fn sinr_gain_circle_pair(
    rendered: &RenderedScene,
    geometry: &ArrayGeometry,
    method: Method,
    stft_cfg: &StftConfig,
    cfg: &BeamformConfig,
) -> Result<GainBreakdown, EvalError> {
    let (a, b) = geometry.pairs()[0];
    let pick = [a, b];
    let sub = RenderedScene {
        mixture: rendered.mixture.select_channels(&pick),
        target_only: rendered.target_only.select_channels(&pick),
        interference_plus_noise_only: rendered
            .interference_plus_noise_only
            .select_channels(&pick),
    };
    sinr_gain_dual(&sub, geometry.spacing(), method, stft_cfg, cfg)
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub directions_deg: Vec<f64>,
    pub input_sinrs_db: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub arrays: Vec<ArrayKind>,
    /// Interference source material. The default is tonal: a broadband
    /// interferer floods every voting bin at sweep-level input SINR and
    /// the localization stage, which both methods share, degrades for
    /// off-broadside targets; a spectrally concentrated interferer leaves
    /// the remaining bins clean, so the sweep measures the beamformers
    /// rather than localization failure.
    pub interferer_kind: SignalKind,
    pub dual_spacing_m: f64,
    pub circle_mics: usize,
    pub circle_diameter_m: f64,
    pub diffuse_noise_db: Option<f64>,
    pub duration_s: f64,
    pub fs: u32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            directions_deg: vec![30.0, 60.0, 90.0, 120.0, 150.0],
            input_sinrs_db: vec![6.0],
            seeds: vec![1, 2, 3],
            methods: vec![Method::MaxSnr],
            arrays: vec![ArrayKind::Dual],
            interferer_kind: SignalKind::Tonal,
            dual_spacing_m: 0.085,
            circle_mics: 6,
            circle_diameter_m: 0.17,
            diffuse_noise_db: Some(-30.0),
            duration_s: 1.0,
            fs: 16000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub source_deg: f64,
    pub interferer_deg: f64,
    pub input_sinr_db: f64,
    pub method: Method,
    pub array: ArrayKind,
    pub gain_db: f64,
    pub seed: u64,
}

/// Mean gain of one source direction over every interferer position and
/// seed, per array and method.
#[derive(Debug, Clone)]
pub struct SourceAverage {
    pub source_deg: f64,
    pub input_sinr_db: f64,
    pub method: Method,
    pub array: ArrayKind,
    pub mean_gain_db: f64,
}

#[derive(Debug, Clone)]
pub struct SinrReport {
    pub rows: Vec<SweepRow>,
    pub averages: Vec<SourceAverage>,
}

fn sweep_scene(
    cfg: &SweepConfig,
    geometry: &ArrayGeometry,
    source_deg: f64,
    interferer_deg: f64,
    input_sinr_db: f64,
) -> Scene {
    Scene {
        target: SourceSpec {
            kind: SignalKind::SpeechLike,
            azimuth_deg: source_deg,
        },
        interferers: vec![SourceSpec {
            kind: cfg.interferer_kind,
            azimuth_deg: interferer_deg,
        }],
        diffuse_noise_db: cfg.diffuse_noise_db,
        input_sinr_db,
        geometry: geometry.clone(),
        fs: cfg.fs,
        duration_s: cfg.duration_s,
    }
}

/// Run the full grid: every ordered (source, interferer) pair of distinct
/// directions, for every input SINR, array, method, and seed. Rows come
/// out ordered by (input SINR, source, interferer, array, method, seed);
/// renders are shared across methods on the same scene.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SinrReport, EvalError> {
    let stft_cfg = StftConfig::default();
    let beam_cfg = BeamformConfig::default();
    let dual_geom = ArrayGeometry::make_dual(cfg.dual_spacing_m)?;
    let circ_geom = ArrayGeometry::make_circular(cfg.circle_mics, cfg.circle_diameter_m)?;
    let wants_dual = cfg.arrays.contains(&ArrayKind::Dual);
    let wants_circle = cfg
        .arrays
        .iter()
        .any(|a| matches!(a, ArrayKind::Circular | ArrayKind::CirclePair));

    let mut rows = Vec::new();
    for &sinr in &cfg.input_sinrs_db {
        for &src in &cfg.directions_deg {
            for &intf in &cfg.directions_deg {
                if src == intf {
                    continue;
                }
                for &seed in &cfg.seeds {
                    let dual_render = if wants_dual {
                        Some(render_scene(
                            &sweep_scene(cfg, &dual_geom, src, intf, sinr),
                            seed,
                        )?)
                    } else {
                        None
                    };
                    let circ_render = if wants_circle {
                        Some(render_scene(
                            &sweep_scene(cfg, &circ_geom, src, intf, sinr),
                            seed,
                        )?)
                    } else {
                        None
                    };
                    for &array in &cfg.arrays {
                        for &method in &cfg.methods {
                            let gain = match array {
                                ArrayKind::Dual => sinr_gain_dual(
                                    dual_render.as_ref().expect("dual render present"),
                                    cfg.dual_spacing_m,
                                    method,
                                    &stft_cfg,
                                    &beam_cfg,
                                )?,
                                ArrayKind::Circular => sinr_gain_circular(
                                    circ_render.as_ref().expect("circular render present"),
                                    &circ_geom,
                                    method,
                                    &stft_cfg,
                                    &beam_cfg,
                                )?,
                                ArrayKind::CirclePair => sinr_gain_circle_pair(
                                    circ_render.as_ref().expect("circular render present"),
                                    &circ_geom,
                                    method,
                                    &stft_cfg,
                                    &beam_cfg,
                                )?,
                            };
                            rows.push(SweepRow {
                                source_deg: src,
                                interferer_deg: intf,
                                input_sinr_db: sinr,
                                method,
                                array,
                                gain_db: gain.gain_db,
                                seed,
                            });
                        }
                    }
                }
            }
        }
    }

    let mut averages = Vec::new();
    for &sinr in &cfg.input_sinrs_db {
        for &src in &cfg.directions_deg {
            for &array in &cfg.arrays {
                for &method in &cfg.methods {
                    let gains: Vec<f64> = rows
                        .iter()
                        .filter(|r| {
                            r.input_sinr_db == sinr
                                && r.source_deg == src
                                && r.array == array
                                && r.method == method
                        })
                        .map(|r| r.gain_db)
                        .collect();
                    if gains.is_empty() {
                        continue;
                    }
                    averages.push(SourceAverage {
                        source_deg: src,
                        input_sinr_db: sinr,
                        method,
                        array,
                        mean_gain_db: gains.iter().sum::<f64>() / gains.len() as f64,
                    });
                }
            }
        }
    }
    Ok(SinrReport { rows, averages })
}

impl SinrReport {
    /// Long-format rows, one line per measurement.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source_deg,interferer_deg,input_sinr_db,method,array,gain_db,seed\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.4},{}",
                r.source_deg,
                r.interferer_deg,
                r.input_sinr_db,
                r.method.label(),
                r.array.label(),
                r.gain_db,
                r.seed
            );
        }
        out
    }

    fn combos(&self) -> Vec<(ArrayKind, Method)> {
        let mut combos = Vec::new();
        for r in &self.rows {
            if !combos.contains(&(r.array, r.method)) {
                combos.push((r.array, r.method));
            }
        }
        combos
    }

    /// Per-source blocks of per-interferer mean gains (over seeds), one
    /// column per array/method combination, closed by the source average.
    pub fn to_markdown(&self) -> String {
        let combos = self.combos();
        let mut out = String::new();
        let mut sinrs: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !sinrs.contains(&r.input_sinr_db) {
                sinrs.push(r.input_sinr_db);
            }
        }
        for &sinr in &sinrs {
            let _ = writeln!(out, "## Input SINR {sinr} dB\n");
            let _ = write!(out, "| source | interferer |");
            for (a, m) in &combos {
                let _ = write!(out, " {} {} |", a.label(), m.label());
            }
            let _ = writeln!(out);
            let _ = write!(out, "|---|---|");
            for _ in &combos {
                let _ = write!(out, "---|");
            }
            let _ = writeln!(out);
            let mut sources: Vec<f64> = Vec::new();
            for r in &self.rows {
                if r.input_sinr_db == sinr && !sources.contains(&r.source_deg) {
                    sources.push(r.source_deg);
                }
            }
            for &src in &sources {
                let mut interferers: Vec<f64> = Vec::new();
                for r in &self.rows {
                    if r.input_sinr_db == sinr
                        && r.source_deg == src
                        && !interferers.contains(&r.interferer_deg)
                    {
                        interferers.push(r.interferer_deg);
                    }
                }
                for &intf in &interferers {
                    let _ = write!(out, "| {src} | {intf} |");
                    for &(a, m) in &combos {
                        let gains: Vec<f64> = self
                            .rows
                            .iter()
                            .filter(|r| {
                                r.input_sinr_db == sinr
                                    && r.source_deg == src
                                    && r.interferer_deg == intf
                                    && r.array == a
                                    && r.method == m
                            })
                            .map(|r| r.gain_db)
                            .collect();
                        let mean = gains.iter().sum::<f64>() / gains.len() as f64;
                        let _ = write!(out, " {mean:.2} |");
                    }
                    let _ = writeln!(out);
                }
                let _ = write!(out, "| {src} | average |");
                for &(a, m) in &combos {
                    let avg = self
                        .averages
                        .iter()
                        .find(|v| {
                            v.input_sinr_db == sinr
                                && v.source_deg == src
                                && v.array == a
                                && v.method == m
                        })
                        .map(|v| v.mean_gain_db)
                        .unwrap_or(f64::NAN);
                    let _ = write!(out, " {avg:.2} |");
                }
                let _ = writeln!(out);
            }
            let _ = writeln!(out);
        }
        out
    }
}
