//! Audio ingestion: WAV decode/encode, resampling, and framing.
//!
//! The pipeline only ever analyzes 16-bit PCM mono at 16 kHz; anything else is
//! either converted on load (stereo is downmixed, other sample rates are
//! resampled by the caller) or rejected with a descriptive error (other
//! codecs and bit depths). Samples are kept as `f64` in [-1, 1], scaled from
//! int16 by 1/32768.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A mono audio clip. Samples are finite and within [-1, 1].
#[derive(Debug, Clone)]
pub struct AudioClip {
    pub utt_id: String,
    pub sample_rate_hz: u32,
    samples: Vec<f64>,
}

impl AudioClip {
    /// Build a clip, validating the sample invariants.
    pub fn new(utt_id: impl Into<String>, sample_rate_hz: u32, samples: Vec<f64>) -> Result<Self> {
        let utt_id = utt_id.into();
        if sample_rate_hz == 0 {
            return Err(Error::InvalidAudio(format!(
                "clip {utt_id:?}: sample rate must be positive"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidAudio(format!("clip {utt_id:?} has no samples")));
        }
        for (i, &s) in samples.iter().enumerate() {
            if !s.is_finite() || s.abs() > 1.0 {
                return Err(Error::InvalidAudio(format!(
                    "clip {utt_id:?}: sample {i} out of range ({s})"
                )));
            }
        }
        Ok(AudioClip {
            utt_id,
            sample_rate_hz,
            samples,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Root-mean-square over the whole clip.
    pub fn rms(&self) -> f64 {
        let sum_sq: f64 = self.samples.iter().map(|s| s * s).sum();
        (sum_sq / self.samples.len() as f64).sqrt()
    }
}

// ---------------------------------------------------------------------------
// WAV decode / encode
//
// Hand-rolled rather than pulled in as a dependency: we accept exactly one
// format (RIFF/WAVE, PCM, 16-bit, mono or stereo) and want precise control
// over the rejection messages and the int16 -> f64 scaling.
// ---------------------------------------------------------------------------

fn wav_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Wav {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Load a 16-bit PCM RIFF/WAVE file. Stereo is downmixed to mono by averaging
/// the two channels; int16 values are scaled by 1/32768.
pub fn load_audio(path: &Path) -> Result<AudioClip> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let utt_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(wav_err(path, "not a RIFF/WAVE file"));
    }

    // Walk the chunk list for fmt and data; ignore everything else (LIST,
    // fact, ...). Chunks are word-aligned, so odd sizes carry a pad byte.
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (codec, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let chunk_id = &bytes[pos..pos + 4];
        let size = read_u32(&bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.checked_add(size).ok_or_else(|| {
            wav_err(path, "chunk size overflows the file")
        })?;
        if body_end > bytes.len() {
            return Err(wav_err(
                path,
                format!(
                    "truncated file: chunk {:?} claims {} bytes but only {} remain",
                    String::from_utf8_lossy(chunk_id),
                    size,
                    bytes.len() - body_start
                ),
            ));
        }
        let body = &bytes[body_start..body_end];
        match chunk_id {
            b"fmt " => {
                if size < 16 {
                    return Err(wav_err(path, "fmt chunk too small"));
                }
                fmt = Some((
                    read_u16(body, 0),
                    read_u16(body, 2),
                    read_u32(body, 4),
                    read_u16(body, 14),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_end + (size & 1);
    }

    let (codec, channels, rate, bits) =
        fmt.ok_or_else(|| wav_err(path, "missing fmt chunk"))?;
    if codec != 1 {
        return Err(wav_err(
            path,
            format!("unsupported codec (format tag {codec}, only PCM is supported)"),
        ));
    }
    if bits != 16 {
        return Err(wav_err(path, format!("unsupported bit depth {bits} (only 16)")));
    }
    if channels == 0 || channels > 2 {
        return Err(wav_err(
            path,
            format!("unsupported channel count {channels} (only mono or stereo)"),
        ));
    }
    let data = data.ok_or_else(|| wav_err(path, "missing data chunk"))?;

    let bytes_per_frame = 2 * channels as usize;
    if data.len() % bytes_per_frame != 0 {
        return Err(wav_err(
            path,
            format!(
                "truncated file: data chunk of {} bytes is not a whole number of {}-byte frames",
                data.len(),
                bytes_per_frame
            ),
        ));
    }

    const SCALE: f64 = 1.0 / 32768.0;
    let n_frames = data.len() / bytes_per_frame;
    let mut samples = Vec::with_capacity(n_frames);
    match channels {
        1 => {
            for chunk in data.chunks_exact(2) {
                let v = i16::from_le_bytes([chunk[0], chunk[1]]);
                samples.push(v as f64 * SCALE);
            }
        }
        _ => {
            for chunk in data.chunks_exact(4) {
                let l = i16::from_le_bytes([chunk[0], chunk[1]]) as f64;
                let r = i16::from_le_bytes([chunk[2], chunk[3]]) as f64;
                samples.push((l + r) * 0.5 * SCALE);
            }
        }
    }
    if samples.is_empty() {
        return Err(wav_err(path, "data chunk holds no samples"));
    }

    AudioClip::new(utt_id, rate, samples)
}

/// Write a clip as 16-bit PCM mono RIFF/WAVE.
///
/// Samples are quantized by `round(s * 32768)` clamped to the int16 range, so
/// a write/load round trip changes each sample by at most 1/32768.
pub fn write_wav(clip: &AudioClip, path: &Path) -> Result<()> {
    let n = clip.len();
    let data_bytes = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_bytes).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&clip.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate_hz * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_bytes.to_le_bytes());
    for &s in clip.samples() {
        let v = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

/// Linear-interpolation resampler.
///
/// Output length is `round(n * target / source)` (half-up). Output sample `i`
/// reads source position `i * source / target`, clamping past-the-end
/// positions to the final sample. Linear interpolation is plenty for this
/// pipeline — the features downstream are coarse summary statistics — and it
/// preserves the sample-range invariant for free (every output is a convex
/// combination of two inputs). Returns an identical clip when the rates
/// already match.
pub fn resample(clip: &AudioClip, target_hz: u32) -> Result<AudioClip> {
    if target_hz == 0 {
        return Err(Error::InvalidAudio("target sample rate must be positive".into()));
    }
    if target_hz == clip.sample_rate_hz {
        return Ok(clip.clone());
    }
    let src = clip.samples();
    let n_out = ((src.len() as f64 * target_hz as f64 / clip.sample_rate_hz as f64) + 0.5)
        .floor() as usize;
    let n_out = n_out.max(1);
    let step = clip.sample_rate_hz as f64 / target_hz as f64;
    let mut out = Vec::with_capacity(n_out);
    for i in 0..n_out {
        let pos = i as f64 * step;
        let idx = pos.floor() as usize;
        if idx + 1 >= src.len() {
            out.push(src[src.len() - 1]);
        } else {
            let frac = pos - idx as f64;
            out.push(src[idx] * (1.0 - frac) + src[idx + 1] * frac);
        }
    }
    AudioClip::new(clip.utt_id.clone(), target_hz, out)
}

// ---------------------------------------------------------------------------
// Framing
// ---------------------------------------------------------------------------

/// Analysis window applied to each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rect,
    Hann,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Rect => "rect",
            Window::Hann => "hann",
        })
    }
}

/// A clip cut into overlapping frames, window already applied.
#[derive(Debug, Clone)]
pub struct FrameSeries {
    pub sample_rate_hz: u32,
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
    frames: Vec<Vec<f64>>,
}

impl FrameSeries {
    /// Assemble a series from pre-built frames (used by tests that need exact
    /// per-frame content). All frames must share one length.
    pub fn from_frames(
        frames: Vec<Vec<f64>>,
        sample_rate_hz: u32,
        hop: usize,
        window: Window,
    ) -> Result<Self> {
        let frame_len = frames.first().map(Vec::len).unwrap_or(0);
        if frame_len == 0 {
            return Err(Error::InvalidAudio("frame series needs non-empty frames".into()));
        }
        if frames.iter().any(|f| f.len() != frame_len) {
            return Err(Error::InvalidAudio("frames must all have the same length".into()));
        }
        if hop == 0 {
            return Err(Error::InvalidAudio("hop must be positive".into()));
        }
        Ok(FrameSeries {
            sample_rate_hz,
            frame_len,
            hop,
            window,
            frames,
        })
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn hop_s(&self) -> f64 {
        self.hop as f64 / self.sample_rate_hz as f64
    }

    pub fn frame_len_s(&self) -> f64 {
        self.frame_len as f64 / self.sample_rate_hz as f64
    }
}

/// Symmetric Hann window of length `n` (zero at both endpoints).
fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / (n - 1) as f64;
            let s = x.sin();
            // 0.5 * (1 - cos(2x)) written via sin^2 for better symmetry.
            s * s
        })
        .collect()
}

/// Cut a clip into frames of `frame_len_s` seconds every `hop_s` seconds and
/// apply the window.
///
/// Lengths are converted to samples with half-up rounding. The frame count is
/// `1 + floor((n - frame_len) / hop)`; trailing samples that do not fill a
/// whole frame are dropped. A clip shorter than one frame is an error.
pub fn frame(clip: &AudioClip, frame_len_s: f64, hop_s: f64, window: Window) -> Result<FrameSeries> {
    let rate = clip.sample_rate_hz as f64;
    let frame_len = ((frame_len_s * rate) + 0.5).floor() as usize;
    let hop = ((hop_s * rate) + 0.5).floor() as usize;
    if frame_len == 0 || hop == 0 {
        return Err(Error::InvalidAudio(format!(
            "frame length {frame_len_s} s / hop {hop_s} s too small at {} Hz",
            clip.sample_rate_hz
        )));
    }
    let n = clip.len();
    if n < frame_len {
        return Err(Error::ClipTooShort {
            utt_id: clip.utt_id.clone(),
            got_s: clip.duration_s(),
            need_s: frame_len_s,
        });
    }
    let count = 1 + (n - frame_len) / hop;
    let win = match window {
        Window::Rect => Vec::new(),
        Window::Hann => hann(frame_len),
    };
    let samples = clip.samples();
    let mut frames = Vec::with_capacity(count);
    for t in 0..count {
        let start = t * hop;
        let slice = &samples[start..start + frame_len];
        let frame = match window {
            Window::Rect => slice.to_vec(),
            Window::Hann => slice.iter().zip(&win).map(|(s, w)| s * w).collect(),
        };
        frames.push(frame);
    }
    FrameSeries::from_frames(frames, clip.sample_rate_hz, hop, window)
}
