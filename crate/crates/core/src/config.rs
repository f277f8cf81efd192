//! Pipeline configuration.
//!
//! Everything the extraction and training stages treat as a tunable lives in
//! [`PipelineConfig`]. The defaults are the contract: all documented behavior
//! and all reference values in the tests assume them. The CLI can load
//! overrides from a JSON file (any subset of fields; missing ones keep their
//! defaults).

use serde::{Deserialize, Serialize};

/// Frame/hop geometry for the two analysis streams.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    /// Spectral frame length in seconds (Hann window) for loudness and flux.
    pub spectral_len_s: f64,
    /// Frame length in seconds (rectangular window) for pitch analysis.
    pub f0_len_s: f64,
    /// Hop between successive frames, shared by both streams.
    pub hop_s: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            spectral_len_s: 0.025,
            f0_len_s: 0.060,
            hop_s: 0.010,
        }
    }
}

/// Voiced/unvoiced decision thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoicingConfig {
    /// A frame is voiced only if its peak normalized autocorrelation reaches
    /// this value.
    pub nac_threshold: f64,
    /// Absolute RMS floor; frames quieter than this are never voiced.
    pub rms_floor: f64,
    /// Relative RMS floor as a fraction of whole-clip RMS.
    pub rms_rel_floor: f64,
    /// Width of the median filter applied to the voicing mask (odd).
    pub median_width: usize,
    /// Pitch search range in Hz.
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
}

impl Default for VoicingConfig {
    fn default() -> Self {
        VoicingConfig {
            nac_threshold: 0.45,
            rms_floor: 1e-4,
            rms_rel_floor: 0.05,
            median_width: 3,
            f0_min_hz: 55.0,
            f0_max_hz: 600.0,
        }
    }
}

/// Logistic-regression trainer hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty on the weights (bias is unregularized).
    pub l2: f64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 0.1,
            epochs: 1000,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub frame: FrameConfig,
    pub voicing: VoicingConfig,
    pub trainer: TrainerConfig,
}

impl PipelineConfig {
    /// The sample rate every clip is resampled to before analysis.
    pub const SAMPLE_RATE_HZ: u32 = 16_000;

    /// Minimum clip duration accepted by the extractor, in seconds.
    pub const MIN_CLIP_S: f64 = 0.1;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let c = PipelineConfig::default();
        assert_eq!(c.frame.spectral_len_s, 0.025);
        assert_eq!(c.frame.f0_len_s, 0.060);
        assert_eq!(c.frame.hop_s, 0.010);
        assert_eq!(c.voicing.nac_threshold, 0.45);
        assert_eq!(c.voicing.median_width, 3);
        assert_eq!(c.trainer.learning_rate, 0.1);
        assert_eq!(c.trainer.epochs, 1000);
        assert_eq!(c.trainer.l2, 1e-4);
    }

    #[test]
    fn partial_override_keeps_other_defaults() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"voicing": {"nac_threshold": 0.5}}"#).unwrap();
        assert_eq!(c.voicing.nac_threshold, 0.5);
        assert_eq!(c.voicing.median_width, 3);
        assert_eq!(c.frame.hop_s, 0.010);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: Result<PipelineConfig, _> = serde_json::from_str(r#"{"framee": {}}"#);
        assert!(r.is_err());
    }
}
