//! Synthetic labeled corpora with known acoustic fingerprints.
//!
//! Real spoofed-speech corpora can't ship with a library, so end-to-end
//! behavior is exercised on generated audio instead: clips alternate sawtooth
//! "voiced" segments with near-silent "unvoiced" gaps, and every class is
//! described by the Gaussians its segment durations and pitch are drawn
//! from. Because the generator keeps its own segment plan, tests can compare
//! what the pipeline measured against what was actually rendered — the
//! fingerprint is ground truth, not another estimate.
//!
//! Everything is deterministic in (seed, attack name, clip index): corpora
//! regenerate byte-identically anywhere.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, AudioClip};
use crate::config::PipelineConfig;
use crate::corpus::{AttackId, Partition, MANIFEST_HEADER};
use crate::error::{Error, Result};
use crate::rng::{fnv1a64, mix_seed, XorShift64};

/// Shortest segment the generator will emit: two analysis hops. Anything
/// shorter can't be represented by the downstream frame grid at all.
pub const MIN_SEGMENT_S: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean: f64,
    pub std: f64,
}

impl GaussianSpec {
    fn sample(&self, rng: &mut XorShift64) -> f64 {
        self.mean + self.std * rng.next_gaussian()
    }
}

/// Recipe for one class of clips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    /// `"bonafide"` or an attack id (`"A01"`..`"A16"`).
    pub attack_name: String,
    pub n_clips: usize,
    /// Voiced (sawtooth) segment duration, seconds.
    pub voiced_dur: GaussianSpec,
    /// Unvoiced (noise) gap duration, seconds.
    pub unvoiced_dur: GaussianSpec,
    /// Sawtooth fundamental, Hz.
    pub f0_hz: GaussianSpec,
    /// Number of voiced segments per clip; gaps sit between them, so a clip
    /// starts and ends voiced.
    pub n_cycles: usize,
    /// Noise floor of the gaps, dBFS (≤ 0).
    pub noise_dbfs: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_clips == 0 {
            return Err(Error::InvalidInput(format!(
                "spec {:?}: n_clips must be at least 1",
                self.attack_name
            )));
        }
        if self.n_cycles == 0 {
            return Err(Error::InvalidInput(format!(
                "spec {:?}: n_cycles must be at least 1",
                self.attack_name
            )));
        }
        for (what, g) in [
            ("voiced_dur", self.voiced_dur),
            ("unvoiced_dur", self.unvoiced_dur),
            ("f0_hz", self.f0_hz),
        ] {
            if !(g.mean > 0.0) || !g.mean.is_finite() || !(g.std >= 0.0) || !g.std.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "spec {:?}: {what} needs mean > 0 and std >= 0",
                    self.attack_name
                )));
            }
        }
        if !(self.noise_dbfs <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "spec {:?}: noise_dbfs must be <= 0 (full scale)",
                self.attack_name
            )));
        }
        Ok(())
    }

    fn stream_seed(&self, clip_index: usize, salt: u64) -> u64 {
        mix_seed(&[
            self.seed,
            fnv1a64(self.attack_name.as_bytes()),
            clip_index as u64,
            salt,
        ])
    }
}

/// One planned segment: what the rendered audio will actually contain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPlan {
    pub voiced: bool,
    pub dur_s: f64,
    /// 0 for unvoiced segments.
    pub f0_hz: f64,
}

/// The ground-truth layout of one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipPlan {
    pub segments: Vec<SegmentPlan>,
}

impl ClipPlan {
    pub fn total_s(&self) -> f64 {
        self.segments.iter().map(|s| s.dur_s).sum()
    }

    /// Mean planned gap duration; `None` when the clip has no gaps
    /// (`n_cycles` = 1).
    pub fn mean_unvoiced_s(&self) -> Option<f64> {
        let gaps: Vec<f64> = self
            .segments
            .iter()
            .filter(|s| !s.voiced)
            .map(|s| s.dur_s)
            .collect();
        if gaps.is_empty() {
            None
        } else {
            Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
        }
    }
}

/// Draw the segment layout for one clip. Durations are clamped below at
/// [`MIN_SEGMENT_S`]; the sampled f0 is clamped into the range the pitch
/// tracker can represent so a "voiced" segment is voiced in fact.
pub fn plan_clip(spec: &SynthSpec, clip_index: usize) -> ClipPlan {
    let mut rng = XorShift64::new(spec.stream_seed(clip_index, 0));
    let mut segments = Vec::with_capacity(2 * spec.n_cycles - 1);
    for cycle in 0..spec.n_cycles {
        let f0 = spec.f0_hz.sample(&mut rng).clamp(65.0, 500.0);
        segments.push(SegmentPlan {
            voiced: true,
            dur_s: spec.voiced_dur.sample(&mut rng).max(MIN_SEGMENT_S),
            f0_hz: f0,
        });
        if cycle + 1 < spec.n_cycles {
            segments.push(SegmentPlan {
                voiced: false,
                dur_s: spec.unvoiced_dur.sample(&mut rng).max(MIN_SEGMENT_S),
                f0_hz: 0.0,
            });
        }
    }
    ClipPlan { segments }
}

const SAWTOOTH_AMPLITUDE: f64 = 0.5;

/// Render a plan to samples.
pub fn render_clip(spec: &SynthSpec, plan: &ClipPlan, clip_index: usize, utt_id: &str) -> AudioClip {
    let rate = PipelineConfig::SAMPLE_RATE_HZ;
    let noise_amp = 10f64.powf(spec.noise_dbfs / 20.0);
    let mut rng = XorShift64::new(spec.stream_seed(clip_index, 1));
    let mut samples = Vec::new();
    for seg in &plan.segments {
        let n = (seg.dur_s * rate as f64).round() as usize;
        if seg.voiced {
            for i in 0..n {
                let phase = (seg.f0_hz * i as f64 / rate as f64).fract();
                samples.push(SAWTOOTH_AMPLITUDE * (2.0 * phase - 1.0));
            }
        } else {
            for _ in 0..n {
                samples.push((noise_amp * rng.next_gaussian()).clamp(-1.0, 1.0));
            }
        }
    }
    AudioClip::new(utt_id, rate, samples).expect("rendered samples are valid audio")
}

/// Plan and render in one step.
pub fn gen_clip(spec: &SynthSpec, clip_index: usize) -> AudioClip {
    let plan = plan_clip(spec, clip_index);
    render_clip(spec, &plan, clip_index, &format!("synth_{clip_index:04}"))
}

/// Generate a full corpus: WAV files plus a manifest the corpus module
/// parses as-is. Returns the manifest path.
///
/// Bona fide clips are split evenly between the train and dev partitions
/// (`b_tr_*` / `b_dv_*`); each attack's clips take the attack's canonical
/// partition. One WAV per utterance, named by utterance id.
pub fn gen_corpus(bona: &SynthSpec, attacks: &[SynthSpec], out_dir: &Path) -> Result<PathBuf> {
    bona.validate()?;
    if bona.attack_name != "bonafide" {
        return Err(Error::InvalidInput(format!(
            "the bona fide spec must be named \"bonafide\", got {:?}",
            bona.attack_name
        )));
    }
    let mut seen = BTreeSet::new();
    let mut attack_ids = Vec::with_capacity(attacks.len());
    for spec in attacks {
        spec.validate()?;
        let id: AttackId = spec
            .attack_name
            .parse()
            .map_err(|_| Error::UnknownAttack(spec.attack_name.clone()))?;
        if !seen.insert(id) {
            return Err(Error::InvalidInput(format!(
                "attack {id} appears twice in the corpus spec"
            )));
        }
        attack_ids.push(id);
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifest = String::from(MANIFEST_HEADER);
    manifest.push('\n');

    let mut emit = |utt_id: &str, clip: &AudioClip, label: &str, attack: &str, partition: Partition| -> Result<()> {
        let file = format!("{utt_id}.wav");
        write_wav(clip, &out_dir.join(&file))?;
        let partition = match partition {
            Partition::Train => "train",
            Partition::Dev => "dev",
        };
        manifest.push_str(&format!("{utt_id}\t{file}\t{label}\t{attack}\t{partition}\n"));
        Ok(())
    };

    // Bona fide: first half train partition, remainder dev.
    let n_train = bona.n_clips.div_ceil(2);
    for i in 0..bona.n_clips {
        let (prefix, partition) = if i < n_train {
            ("b_tr", Partition::Train)
        } else {
            ("b_dv", Partition::Dev)
        };
        let utt_id = format!("{prefix}_{i:04}");
        let plan = plan_clip(bona, i);
        let clip = render_clip(bona, &plan, i, &utt_id);
        emit(&utt_id, &clip, "bonafide", "-", partition)?;
    }

    for (spec, &id) in attacks.iter().zip(&attack_ids) {
        let prefix = spec.attack_name.to_lowercase();
        for i in 0..spec.n_clips {
            let utt_id = format!("{prefix}_{i:04}");
            let plan = plan_clip(spec, i);
            let clip = render_clip(spec, &plan, i, &utt_id);
            emit(&utt_id, &clip, "spoof", &spec.attack_name, id.partition())?;
        }
    }

    let manifest_path = out_dir.join("manifest.tsv");
    fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

/// The corpus description the `synth` command reads from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub bona: SynthSpec,
    pub attacks: Vec<SynthSpec>,
}

impl CorpusSpec {
    pub fn read(path: &Path) -> Result<CorpusSpec> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}
