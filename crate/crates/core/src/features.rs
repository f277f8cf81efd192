//! The scalar feature registry and extraction.
//!
//! Utterances are summarized into a fixed 88-slot vector of scalar
//! descriptors. The slot order follows the widely used eGeMAPS v2 functional
//! set so that slot numbers (`F19`, `F66`, `F85`, ...) mean the same thing
//! here as in the anti-spoofing literature that analyzes these features. This
//! library implements the 24 slots its pipeline actually needs — the
//! loudness, spectral-flux, pitch, and voicing-segment statistics — and keeps
//! the remaining slots reserved: present in the registry with their canonical
//! names, `Unavailable` (JSON `null`) in every extracted vector.
//!
//! Degenerate statistics (empty selections, zero-mean normalizations, missing
//! segments) never produce NaN: the value is 0 and the slot index is recorded
//! in the vector's `flags`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::audio::{frame, resample, AudioClip, Window};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::lld::{self, LldTrack, VoicingMask};

pub const N_FEATURES: usize = 88;
pub const REGISTRY_VERSION: &str = "egemaps-subset-1";

/// Reference pitch for the semitone conversion: 27.5 Hz (A0).
const SEMITONE_REF_HZ: f64 = 27.5;

/// Which frames a functional is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    All,
    VoicedOnly,
    UnvoicedOnly,
}

/// Distribution functionals over a track.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Amean,
    /// Population standard deviation divided by |mean|.
    StddevNorm,
    Percentile20,
    Percentile50,
    Percentile80,
    /// percentile80 - percentile20.
    PctlRange20To80,
}

/// Statistics over rising/falling inter-extremum segments of a track.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeStat {
    MeanRising,
    StddevRising,
    MeanFalling,
    StddevFalling,
}

/// Statistics over contiguous voiced/unvoiced runs of the mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentStat {
    VoicedPerSecond,
    MeanVoicedLen,
    StddevVoicedLen,
    MeanUnvoicedLen,
    StddevUnvoicedLen,
}

/// The smoothed tracks extraction works from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackKind {
    /// Pitch in semitones above 27.5 Hz (0 on unvoiced frames).
    F0Semitone,
    Loudness,
    SpectralFlux,
}

/// How an implemented slot is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Computation {
    Functional(TrackKind, Functional, MaskMode),
    Slope(TrackKind, SlopeStat),
    Segment(SegmentStat),
}

/// One registry slot.
#[derive(Debug, Clone)]
pub struct FeatureDef {
    pub index: usize,
    /// Canonical feature name, e.g. `loudness_sma3_stddevFallingSlope`.
    pub name: String,
    /// Descriptor stream the slot summarizes, e.g. `loudness`.
    pub lld: String,
    /// Summary statistic name, e.g. `stddevFallingSlope`.
    pub functional: String,
    pub mask_mode: MaskMode,
    /// `Some` for the 24 slots this pipeline can compute.
    pub computation: Option<Computation>,
}

impl FeatureDef {
    pub fn implemented(&self) -> bool {
        self.computation.is_some()
    }

    /// Short display form used in tables: `F<index>`.
    pub fn short(&self) -> String {
        format!("F{}", self.index)
    }
}

pub struct FeatureRegistry {
    defs: Vec<FeatureDef>,
}

impl FeatureRegistry {
    pub fn version(&self) -> &'static str {
        REGISTRY_VERSION
    }

    pub fn defs(&self) -> &[FeatureDef] {
        &self.defs
    }

    pub fn def(&self, index: usize) -> Result<&FeatureDef> {
        self.defs.get(index).ok_or_else(|| Error::InvalidInput(format!(
            "feature index {index} out of range (0..{N_FEATURES})"
        )))
    }

    pub fn implemented_indices(&self) -> Vec<usize> {
        self.defs
            .iter()
            .filter(|d| d.implemented())
            .map(|d| d.index)
            .collect()
    }
}

/// The process-wide registry.
pub fn registry() -> &'static FeatureRegistry {
    static REGISTRY: OnceLock<FeatureRegistry> = OnceLock::new();
    REGISTRY.get_or_init(|| FeatureRegistry { defs: build_defs() })
}

fn build_defs() -> Vec<FeatureDef> {
    use Computation as C;
    use Functional as F;
    use MaskMode as M;
    use TrackKind as T;

    let mut defs: Vec<FeatureDef> = Vec::with_capacity(N_FEATURES);
    let mut push = |name: &str, lld: &str, functional: &str, mask: M, comp: Option<C>| {
        defs.push(FeatureDef {
            index: defs.len(),
            name: name.to_string(),
            lld: lld.to_string(),
            functional: functional.to_string(),
            mask_mode: mask,
            computation: comp,
        });
    };

    // The ten distribution functionals share naming across streams.
    const DIST: [(&str, Option<Functional>); 10] = [
        ("amean", Some(F::Amean)),
        ("stddevNorm", Some(F::StddevNorm)),
        ("percentile20.0", Some(F::Percentile20)),
        ("percentile50.0", Some(F::Percentile50)),
        ("percentile80.0", Some(F::Percentile80)),
        ("pctlrange0-2", Some(F::PctlRange20To80)),
        ("meanRisingSlope", None),
        ("stddevRisingSlope", None),
        ("meanFallingSlope", None),
        ("stddevFallingSlope", None),
    ];
    const SLOPES: [SlopeStat; 4] = [
        SlopeStat::MeanRising,
        SlopeStat::StddevRising,
        SlopeStat::MeanFalling,
        SlopeStat::StddevFalling,
    ];

    // 0-9: pitch functionals over voiced frames. Only the five distribution
    // statistics are implemented; the range and slope slots stay reserved.
    for (i, (fname, functional)) in DIST.iter().enumerate() {
        let comp = match functional {
            Some(f) if i < 5 => Some(C::Functional(T::F0Semitone, *f, M::VoicedOnly)),
            _ => None,
        };
        push(
            &format!("F0semitoneFrom27.5Hz_sma3nz_{fname}"),
            "F0semitone",
            fname,
            M::VoicedOnly,
            comp,
        );
    }

    // 10-19: loudness functionals over all frames, all ten implemented.
    for (i, (fname, functional)) in DIST.iter().enumerate() {
        let comp = match functional {
            Some(f) => Some(C::Functional(T::Loudness, *f, M::All)),
            None => Some(C::Slope(T::Loudness, SLOPES[i - 6])),
        };
        push(&format!("loudness_sma3_{fname}"), "loudness", fname, M::All, comp);
    }

    // 20-21: spectral flux over all frames.
    push(
        "spectralFlux_sma3_amean",
        "spectralFlux",
        "amean",
        M::All,
        Some(C::Functional(T::SpectralFlux, F::Amean, M::All)),
    );
    push(
        "spectralFlux_sma3_stddevNorm",
        "spectralFlux",
        "stddevNorm",
        M::All,
        None,
    );

    // 22-29: MFCC means/spreads (reserved).
    for i in 1..=4 {
        for fname in ["amean", "stddevNorm"] {
            push(&format!("mfcc{i}_sma3_{fname}"), &format!("mfcc{i}"), fname, M::All, None);
        }
    }

    // 30-39: voice-quality descriptors (reserved).
    for lld in ["jitterLocal", "shimmerLocaldB", "HNRdBACF", "logRelF0-H1-H2", "logRelF0-H1-A3"] {
        for fname in ["amean", "stddevNorm"] {
            push(&format!("{lld}_sma3nz_{fname}"), lld, fname, M::VoicedOnly, None);
        }
    }

    // 40-57: formant descriptors (reserved).
    for i in 1..=3 {
        for part in ["frequency", "bandwidth", "amplitudeLogRelF0"] {
            for fname in ["amean", "stddevNorm"] {
                push(
                    &format!("F{i}{part}_sma3nz_{fname}"),
                    &format!("F{i}{part}"),
                    fname,
                    M::VoicedOnly,
                    None,
                );
            }
        }
    }

    // 58-65: voiced spectral balance descriptors (reserved).
    for lld in ["alphaRatioV", "hammarbergIndexV", "slopeV0-500", "slopeV500-1500"] {
        for fname in ["amean", "stddevNorm"] {
            push(&format!("{lld}_sma3nz_{fname}"), lld, fname, M::VoicedOnly, None);
        }
    }

    // 66-67: spectral flux over voiced frames (implemented).
    push(
        "spectralFluxV_sma3nz_amean",
        "spectralFlux",
        "amean",
        M::VoicedOnly,
        Some(C::Functional(T::SpectralFlux, F::Amean, M::VoicedOnly)),
    );
    push(
        "spectralFluxV_sma3nz_stddevNorm",
        "spectralFlux",
        "stddevNorm",
        M::VoicedOnly,
        Some(C::Functional(T::SpectralFlux, F::StddevNorm, M::VoicedOnly)),
    );

    // 68-75: voiced MFCC means/spreads (reserved).
    for i in 1..=4 {
        for fname in ["amean", "stddevNorm"] {
            push(
                &format!("mfcc{i}V_sma3nz_{fname}"),
                &format!("mfcc{i}"),
                fname,
                M::VoicedOnly,
                None,
            );
        }
    }

    // 76-80: unvoiced spectral descriptors; flux is implemented.
    for lld in ["alphaRatioUV", "hammarbergIndexUV", "slopeUV0-500", "slopeUV500-1500"] {
        push(&format!("{lld}_sma3nz_amean"), lld, "amean", M::UnvoicedOnly, None);
    }
    push(
        "spectralFluxUV_sma3nz_amean",
        "spectralFlux",
        "amean",
        M::UnvoicedOnly,
        Some(C::Functional(T::SpectralFlux, F::Amean, M::UnvoicedOnly)),
    );

    // 81: loudness peak rate (reserved).
    push("loudnessPeaksPerSec", "loudness", "peaksPerSec", M::All, None);

    // 82-86: voicing segment statistics (implemented).
    push(
        "VoicedSegmentsPerSec",
        "voicing",
        "segmentsPerSec",
        M::VoicedOnly,
        Some(C::Segment(SegmentStat::VoicedPerSecond)),
    );
    push(
        "MeanVoicedSegmentLengthSec",
        "voicing",
        "meanSegmentLength",
        M::VoicedOnly,
        Some(C::Segment(SegmentStat::MeanVoicedLen)),
    );
    push(
        "StddevVoicedSegmentLengthSec",
        "voicing",
        "stddevSegmentLength",
        M::VoicedOnly,
        Some(C::Segment(SegmentStat::StddevVoicedLen)),
    );
    push(
        "MeanUnvoicedSegmentLength",
        "voicing",
        "meanSegmentLength",
        M::UnvoicedOnly,
        Some(C::Segment(SegmentStat::MeanUnvoicedLen)),
    );
    push(
        "StddevUnvoicedSegmentLength",
        "voicing",
        "stddevSegmentLength",
        M::UnvoicedOnly,
        Some(C::Segment(SegmentStat::StddevUnvoicedLen)),
    );

    // 87: equivalent sound level (reserved).
    push("equivalentSoundLevel_dBp", "soundLevel", "equivalentSoundLevel", M::All, None);

    assert_eq!(defs.len(), N_FEATURES);
    defs
}

// ---------------------------------------------------------------------------
// Functionals
// ---------------------------------------------------------------------------

/// Marker for a statistic whose input was degenerate (empty selection, too
/// few values, zero-mean normalization). Callers substitute 0 and set a flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degenerate;

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_std(values: &[f64], mean: f64) -> f64 {
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// Percentile with linear interpolation between order statistics: the rank is
/// `p/100 * (n-1)` and fractional ranks interpolate between neighbors.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Evaluate one distribution functional over a plain value slice.
pub fn functional_value(functional: Functional, values: &[f64]) -> std::result::Result<f64, Degenerate> {
    if values.is_empty() {
        return Err(Degenerate);
    }
    match functional {
        Functional::Amean => Ok(mean(values)),
        Functional::StddevNorm => {
            if values.len() < 2 {
                return Err(Degenerate);
            }
            let m = mean(values);
            if m == 0.0 {
                return Err(Degenerate);
            }
            Ok(population_std(values, m) / m.abs())
        }
        Functional::Percentile20 | Functional::Percentile50 | Functional::Percentile80 => {
            let p = match functional {
                Functional::Percentile20 => 20.0,
                Functional::Percentile50 => 50.0,
                _ => 80.0,
            };
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            Ok(percentile(&sorted, p))
        }
        Functional::PctlRange20To80 => {
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            Ok(percentile(&sorted, 80.0) - percentile(&sorted, 20.0))
        }
    }
}

/// Select the track values a masked functional runs over. When the mask and
/// track come from streams with different frame lengths their counts differ
/// by a few trailing frames; selection pairs them index-by-index over the
/// common prefix (both streams share hop and start time).
fn select_values(track: &[f64], voiced: &[bool], mode: MaskMode) -> Vec<f64> {
    match mode {
        MaskMode::All => track.to_vec(),
        MaskMode::VoicedOnly | MaskMode::UnvoicedOnly => {
            let want = mode == MaskMode::VoicedOnly;
            track
                .iter()
                .zip(voiced)
                .filter(|(_, &v)| v == want)
                .map(|(&t, _)| t)
                .collect()
        }
    }
}

/// Apply a functional to a track under a mask mode.
pub fn apply_functional(
    track: &LldTrack,
    mask: &VoicingMask,
    functional: Functional,
    mode: MaskMode,
) -> std::result::Result<f64, Degenerate> {
    let values = select_values(&track.values, &mask.voiced, mode);
    functional_value(functional, &values)
}

// ---------------------------------------------------------------------------
// Slope statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeStats {
    pub mean_rising: f64,
    pub stddev_rising: f64,
    pub mean_falling: f64,
    pub stddev_falling: f64,
    pub rising_degenerate: bool,
    pub falling_degenerate: bool,
}

/// Slopes of the rising and falling segments between alternating local
/// extrema of a track.
///
/// The track is first collapsed into runs of equal consecutive values; a
/// plateau that forms a local extremum is represented by its midpoint index
/// (possibly fractional). The first and last runs always count as extrema, so
/// a monotone track contributes exactly one segment. Each inter-extremum
/// segment with a positive value change is a rising segment, negative is
/// falling; slopes are `delta_value / delta_time` in 1/s. Falling slopes are
/// negative. A direction with no segments reports 0/0 and its degenerate
/// flag; stddevs are population stddevs (a single segment gives 0).
pub fn slope_stats(track: &LldTrack) -> SlopeStats {
    // Runs of equal consecutive values: (midpoint index, value).
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut start = 0usize;
    let values = &track.values;
    for i in 1..=values.len() {
        if i == values.len() || values[i] != values[start] {
            runs.push(((start + i - 1) as f64 / 2.0, values[start]));
            start = i;
        }
    }

    let mut extrema: Vec<(f64, f64)> = Vec::new();
    if runs.len() >= 2 {
        extrema.push(runs[0]);
        for w in runs.windows(3) {
            let [(_, prev), cur, (_, next)] = [w[0], w[1], w[2]];
            let is_max = cur.1 > prev && cur.1 > next;
            let is_min = cur.1 < prev && cur.1 < next;
            if is_max || is_min {
                extrema.push(cur);
            }
        }
        extrema.push(runs[runs.len() - 1]);
    }

    let mut rising = Vec::new();
    let mut falling = Vec::new();
    for pair in extrema.windows(2) {
        let [(i0, v0), (i1, v1)] = [pair[0], pair[1]];
        let slope = (v1 - v0) / ((i1 - i0) * track.hop_s);
        if v1 > v0 {
            rising.push(slope);
        } else if v1 < v0 {
            falling.push(slope);
        }
    }

    let summarize = |xs: &[f64]| -> (f64, f64, bool) {
        if xs.is_empty() {
            (0.0, 0.0, true)
        } else {
            let m = mean(xs);
            (m, population_std(xs, m), false)
        }
    };
    let (mean_rising, stddev_rising, rising_degenerate) = summarize(&rising);
    let (mean_falling, stddev_falling, falling_degenerate) = summarize(&falling);
    SlopeStats {
        mean_rising,
        stddev_rising,
        mean_falling,
        stddev_falling,
        rising_degenerate,
        falling_degenerate,
    }
}

// ---------------------------------------------------------------------------
// Segment statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentStats {
    pub voiced_segments_per_s: f64,
    pub mean_voiced_s: f64,
    pub stddev_voiced_s: f64,
    pub mean_unvoiced_s: f64,
    pub stddev_unvoiced_s: f64,
    pub voiced_degenerate: bool,
    pub unvoiced_degenerate: bool,
}

/// Run-length statistics of the voicing mask.
///
/// A segment is a maximal run of frames with equal voicing; its length is
/// `run_length * hop` seconds (the physical tail of the final analysis frame
/// is not counted, so a run understates its acoustic extent by up to
/// `frame_len - hop`). The segment rate divides the voiced-run count by the
/// mask duration `len * hop`. A side with no segments reports 0 for its
/// mean/stddev plus its degenerate flag.
pub fn segment_stats(mask: &VoicingMask) -> SegmentStats {
    let mut voiced_runs: Vec<f64> = Vec::new();
    let mut unvoiced_runs: Vec<f64> = Vec::new();
    let mut start = 0usize;
    let v = &mask.voiced;
    for i in 1..=v.len() {
        if i == v.len() || v[i] != v[start] {
            let len_s = (i - start) as f64 * mask.hop_s;
            if v[start] {
                voiced_runs.push(len_s);
            } else {
                unvoiced_runs.push(len_s);
            }
            start = i;
        }
    }

    let summarize = |xs: &[f64]| -> (f64, f64, bool) {
        if xs.is_empty() {
            (0.0, 0.0, true)
        } else {
            let m = mean(xs);
            (m, population_std(xs, m), false)
        }
    };
    let (mean_voiced_s, stddev_voiced_s, voiced_degenerate) = summarize(&voiced_runs);
    let (mean_unvoiced_s, stddev_unvoiced_s, unvoiced_degenerate) = summarize(&unvoiced_runs);
    let duration = v.len() as f64 * mask.hop_s;
    SegmentStats {
        voiced_segments_per_s: if duration > 0.0 {
            voiced_runs.len() as f64 / duration
        } else {
            0.0
        },
        mean_voiced_s,
        stddev_voiced_s,
        mean_unvoiced_s,
        stddev_unvoiced_s,
        voiced_degenerate,
        unvoiced_degenerate,
    }
}

// ---------------------------------------------------------------------------
// Full-vector extraction
// ---------------------------------------------------------------------------

/// One utterance's extracted features.
///
/// `values` always has [`N_FEATURES`] entries; `None` marks a reserved
/// (unimplemented) slot, never a failed computation. `flags` lists the slots
/// whose statistic was degenerate (their value is 0), ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub utt_id: String,
    pub registry_version: String,
    pub values: Vec<Option<f64>>,
    pub flags: Vec<usize>,
}

impl FeatureVector {
    /// Value of an implemented slot.
    pub fn value(&self, index: usize) -> Result<f64> {
        match self.values.get(index) {
            Some(Some(v)) => Ok(*v),
            Some(None) => Err(Error::FeatureUnavailable {
                index,
                version: self.registry_version.clone(),
            }),
            None => Err(Error::InvalidInput(format!(
                "feature index {index} out of range"
            ))),
        }
    }

    pub fn is_flagged(&self, index: usize) -> bool {
        self.flags.binary_search(&index).is_ok()
    }

    /// Validate shape, finiteness, and flag consistency.
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != N_FEATURES {
            return Err(Error::InvalidInput(format!(
                "feature vector for {:?} has {} slots, expected {N_FEATURES}",
                self.utt_id,
                self.values.len()
            )));
        }
        for (i, v) in self.values.iter().enumerate() {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "feature vector for {:?}: slot {i} is not finite",
                        self.utt_id
                    )));
                }
            }
        }
        for w in self.flags.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidInput(format!(
                    "feature vector for {:?}: flags not strictly ascending",
                    self.utt_id
                )));
            }
        }
        if let Some(&max) = self.flags.last() {
            if max >= N_FEATURES {
                return Err(Error::InvalidInput(format!(
                    "feature vector for {:?}: flag {max} out of range",
                    self.utt_id
                )));
            }
        }
        Ok(())
    }
}

/// All smoothed tracks and the mask for one clip, the inputs the registry
/// computations read from.
struct ClipAnalysis {
    loudness: LldTrack,
    flux: LldTrack,
    f0_semitone: LldTrack,
    mask: VoicingMask,
    slopes_loudness: SlopeStats,
    segments: SegmentStats,
}

impl ClipAnalysis {
    fn track(&self, kind: TrackKind) -> &LldTrack {
        match kind {
            TrackKind::F0Semitone => &self.f0_semitone,
            TrackKind::Loudness => &self.loudness,
            TrackKind::SpectralFlux => &self.flux,
        }
    }
}

/// Width of the moving-average smoothing applied to every track (the `sma3`
/// in the feature names).
const SMA_WINDOW: usize = 3;

/// Extract the full 88-slot vector from a clip.
///
/// The clip is resampled to 16 kHz, analyzed on two frame streams (25 ms Hann
/// for loudness/flux, 60 ms rectangular for pitch, both with a 10 ms hop),
/// each track is smoothed with a centered 3-frame moving average, pitch is
/// converted to semitones above 27.5 Hz on voiced frames, and every
/// implemented registry slot is evaluated. Clips shorter than 100 ms are
/// rejected.
pub fn extract_all(clip: &AudioClip, cfg: &PipelineConfig) -> Result<FeatureVector> {
    if clip.duration_s() < PipelineConfig::MIN_CLIP_S {
        return Err(Error::ClipTooShort {
            utt_id: clip.utt_id.clone(),
            got_s: clip.duration_s(),
            need_s: PipelineConfig::MIN_CLIP_S,
        });
    }
    let clip = resample(clip, PipelineConfig::SAMPLE_RATE_HZ)?;

    let spectral = frame(&clip, cfg.frame.spectral_len_s, cfg.frame.hop_s, Window::Hann)?;
    let pitch = frame(&clip, cfg.frame.f0_len_s, cfg.frame.hop_s, Window::Rect)?;

    let loudness = lld::smooth_sma(&lld::loudness_track(&spectral), SMA_WINDOW);
    let flux = lld::smooth_sma(&lld::spectral_flux_track(&spectral), SMA_WINDOW);
    let (f0_hz, mask) = lld::f0_voicing_track(&pitch, &cfg.voicing);
    let semitone = LldTrack {
        values: f0_hz
            .values
            .iter()
            .map(|&f| {
                if f > 0.0 {
                    12.0 * (f / SEMITONE_REF_HZ).log2()
                } else {
                    0.0
                }
            })
            .collect(),
        hop_s: f0_hz.hop_s,
    };
    let f0_semitone = lld::smooth_sma(&semitone, SMA_WINDOW);

    let analysis = ClipAnalysis {
        slopes_loudness: slope_stats(&loudness),
        segments: segment_stats(&mask),
        loudness,
        flux,
        f0_semitone,
        mask,
    };

    let mut values = vec![None; N_FEATURES];
    let mut flags = Vec::new();
    for def in registry().defs() {
        let Some(comp) = def.computation else {
            continue;
        };
        let (value, degenerate) = evaluate(comp, &analysis);
        values[def.index] = Some(value);
        if degenerate {
            flags.push(def.index);
        }
    }

    let fv = FeatureVector {
        utt_id: clip.utt_id.clone(),
        registry_version: REGISTRY_VERSION.to_string(),
        values,
        flags,
    };
    fv.validate()?;
    Ok(fv)
}

fn evaluate(comp: Computation, a: &ClipAnalysis) -> (f64, bool) {
    match comp {
        Computation::Functional(kind, functional, mode) => {
            match apply_functional(a.track(kind), &a.mask, functional, mode) {
                Ok(v) => (v, false),
                Err(Degenerate) => (0.0, true),
            }
        }
        Computation::Slope(kind, stat) => {
            debug_assert_eq!(kind, TrackKind::Loudness);
            let s = &a.slopes_loudness;
            match stat {
                SlopeStat::MeanRising => (s.mean_rising, s.rising_degenerate),
                SlopeStat::StddevRising => (s.stddev_rising, s.rising_degenerate),
                SlopeStat::MeanFalling => (s.mean_falling, s.falling_degenerate),
                SlopeStat::StddevFalling => (s.stddev_falling, s.falling_degenerate),
            }
        }
        Computation::Segment(stat) => {
            let s = &a.segments;
            match stat {
                SegmentStat::VoicedPerSecond => (s.voiced_segments_per_s, false),
                SegmentStat::MeanVoicedLen => (s.mean_voiced_s, s.voiced_degenerate),
                SegmentStat::StddevVoicedLen => (s.stddev_voiced_s, s.voiced_degenerate),
                SegmentStat::MeanUnvoicedLen => (s.mean_unvoiced_s, s.unvoiced_degenerate),
                SegmentStat::StddevUnvoicedLen => (s.stddev_unvoiced_s, s.unvoiced_degenerate),
            }
        }
    }
}
