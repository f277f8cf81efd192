//! Frame-level low-level descriptors: loudness, spectral flux, and the
//! F0/voicing track.
//!
//! All three descriptors run on the [`FrameSeries`](crate::audio::FrameSeries)
//! produced by [`crate::audio::frame`]: loudness and flux expect the
//! 25 ms Hann stream, pitch expects the 60 ms rectangular stream. Tracks share
//! the hop of their source series, one value per frame.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::{FrameSeries, Window};
use crate::config::VoicingConfig;

/// One scalar descriptor sampled once per frame.
#[derive(Debug, Clone)]
pub struct LldTrack {
    pub values: Vec<f64>,
    /// Seconds between consecutive values.
    pub hop_s: f64,
}

/// Per-frame voiced/unvoiced decisions, aligned with the F0 track.
#[derive(Debug, Clone)]
pub struct VoicingMask {
    pub voiced: Vec<bool>,
    pub hop_s: f64,
}

impl VoicingMask {
    pub fn len(&self) -> usize {
        self.voiced.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voiced.is_empty()
    }
}

/// Magnitude spectra for every frame of a series (bins `0..=len/2`).
fn magnitude_spectra(fs: &FrameSeries) -> Vec<Vec<f64>> {
    let n = fs.frame_len;
    let n_bins = n / 2 + 1;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    fs.frames()
        .iter()
        .map(|frame| {
            let mut buf: Vec<Complex64> =
                frame.iter().map(|&s| Complex64::new(s, 0.0)).collect();
            fft.process_with_scratch(&mut buf, &mut scratch);
            buf[..n_bins].iter().map(|c| c.norm()).collect()
        })
        .collect()
}

/// Triangular mel filterbank: per band, the (bin, weight) pairs with nonzero
/// weight. Bands span `f_lo..f_hi` with edges equally spaced on the mel scale.
fn mel_filterbank(
    n_bands: usize,
    f_lo: f64,
    f_hi: f64,
    n_bins: usize,
    bin_hz: f64,
) -> Vec<Vec<(usize, f64)>> {
    let to_mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let from_mel = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let m_lo = to_mel(f_lo);
    let m_hi = to_mel(f_hi);
    let edges: Vec<f64> = (0..n_bands + 2)
        .map(|i| from_mel(m_lo + (m_hi - m_lo) * i as f64 / (n_bands + 1) as f64))
        .collect();

    (0..n_bands)
        .map(|b| {
            let (left, center, right) = (edges[b], edges[b + 1], edges[b + 2]);
            let mut taps = Vec::new();
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let w = if f <= left || f >= right {
                    0.0
                } else if f <= center {
                    (f - left) / (center - left)
                } else {
                    (right - f) / (right - center)
                };
                if w > 0.0 {
                    taps.push((k, w));
                }
            }
            taps
        })
        .collect()
}

const LOUDNESS_BANDS: usize = 26;
const LOUDNESS_EXPONENT: f64 = 0.3;

/// Perceptual loudness proxy per frame.
///
/// Each frame's power spectrum is pooled into 26 mel-spaced triangular bands
/// between 0 Hz and 8 kHz (or Nyquist if lower), each band energy is
/// compressed with a 0.3 power law, and the compressed energies are summed.
/// Digital silence maps to exactly 0. Because the compression is applied per
/// band, a global gain `g` scales the whole track by `g^0.6`.
///
/// Expects the 25 ms Hann frame stream.
pub fn loudness_track(fs: &FrameSeries) -> LldTrack {
    debug_assert_eq!(fs.window, Window::Hann);
    let bin_hz = fs.sample_rate_hz as f64 / fs.frame_len as f64;
    let n_bins = fs.frame_len / 2 + 1;
    let f_hi = (fs.sample_rate_hz as f64 / 2.0).min(8000.0);
    let bank = mel_filterbank(LOUDNESS_BANDS, 0.0, f_hi, n_bins, bin_hz);

    let values = magnitude_spectra(fs)
        .iter()
        .map(|mag| {
            bank.iter()
                .map(|taps| {
                    let energy: f64 = taps.iter().map(|&(k, w)| w * mag[k] * mag[k]).sum();
                    energy.powf(LOUDNESS_EXPONENT)
                })
                .sum()
        })
        .collect();
    LldTrack {
        values,
        hop_s: fs.hop_s(),
    }
}

/// Spectral flux per frame: squared Euclidean distance between consecutive
/// L2-normalized magnitude spectra.
///
/// The first frame has flux 0 by definition, and an all-zero frame normalizes
/// to the zero vector rather than dividing by zero. Because spectra are
/// normalized before differencing, flux is invariant to global gain, and two
/// frames with disjoint spectral support are at the maximum distance of 2.
///
/// Expects the same 25 ms Hann frame stream as [`loudness_track`].
pub fn spectral_flux_track(fs: &FrameSeries) -> LldTrack {
    debug_assert_eq!(fs.window, Window::Hann);
    let spectra = magnitude_spectra(fs);
    let unit: Vec<Vec<f64>> = spectra
        .into_iter()
        .map(|mag| {
            let norm = mag.iter().map(|m| m * m).sum::<f64>().sqrt();
            if norm > 0.0 {
                mag.into_iter().map(|m| m / norm).collect()
            } else {
                mag // already all zeros
            }
        })
        .collect();

    let mut values = Vec::with_capacity(unit.len());
    for t in 0..unit.len() {
        if t == 0 {
            values.push(0.0);
        } else {
            let d: f64 = unit[t]
                .iter()
                .zip(&unit[t - 1])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            values.push(d);
        }
    }
    LldTrack {
        values,
        hop_s: fs.hop_s(),
    }
}

/// Normalized autocorrelation of one frame at every lag in
/// `lag_min..=lag_max`, returned as a dense vector indexed from `lag_min`.
///
/// `nac(tau) = sum(x[n] x[n+tau]) / sqrt(sum_{n<L-tau} x[n]^2 * sum_{n>=tau} x[n]^2)`
///
/// The raw correlations come from one FFT round trip (power spectrum of the
/// zero-padded frame), the normalizers from prefix sums; both are exact up to
/// rounding, so this matches the direct O(L*K) evaluation to ~1e-12 while
/// being fast enough to run on every frame.
fn frame_nac(
    frame: &[f64],
    lag_min: usize,
    lag_max: usize,
    fwd: &std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: &std::sync::Arc<dyn rustfft::Fft<f64>>,
    pad: usize,
    scratch: &mut Vec<Complex64>,
) -> Vec<f64> {
    let l = frame.len();
    // Prefix sums of squared samples: energy[i] = sum of x[0..i]^2.
    let mut energy = Vec::with_capacity(l + 1);
    energy.push(0.0);
    let mut acc = 0.0;
    for &s in frame {
        acc += s * s;
        energy.push(acc);
    }

    let mut buf = vec![Complex64::default(); pad];
    for (b, &s) in buf.iter_mut().zip(frame.iter()) {
        b.re = s;
    }
    scratch.resize(
        fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len()),
        Complex64::default(),
    );
    fwd.process_with_scratch(&mut buf, scratch);
    for b in buf.iter_mut() {
        *b = Complex64::new(b.norm_sqr(), 0.0);
    }
    inv.process_with_scratch(&mut buf, scratch);
    let scale = 1.0 / pad as f64;

    (lag_min..=lag_max)
        .map(|tau| {
            let r = buf[tau].re * scale;
            let denom = (energy[l - tau] * (energy[l] - energy[tau])).sqrt();
            if denom > 1e-300 {
                r / denom
            } else {
                0.0
            }
        })
        .collect()
}

/// Pitch and voicing per frame.
///
/// Per frame, the peak of the normalized autocorrelation over the lag range
/// for `f0_min_hz..f0_max_hz` nominates a pitch candidate; the peak lag is
/// refined by parabolic interpolation over its two neighbors. A frame is
/// voiced when the peak value reaches `nac_threshold` *and* the frame RMS
/// reaches `max(rms_floor, rms_rel_floor * clip RMS)` (the clip RMS is taken
/// over all frames of the series). The voicing mask is then cleaned with a
/// `median_width` median filter (edges replicate), and F0 is the candidate
/// frequency on voiced frames, 0 elsewhere.
///
/// Expects the 60 ms rectangular frame stream.
pub fn f0_voicing_track(fs: &FrameSeries, cfg: &VoicingConfig) -> (LldTrack, VoicingMask) {
    debug_assert_eq!(fs.window, Window::Rect);
    let rate = fs.sample_rate_hz as f64;
    let l = fs.frame_len;
    let lag_min = ((rate / cfg.f0_max_hz).ceil() as usize).max(1);
    let lag_max = ((rate / cfg.f0_min_hz).floor() as usize).min(l - 1);
    assert!(
        lag_min < lag_max,
        "pitch lag range empty: frame of {l} samples at {rate} Hz for \
         {}..{} Hz",
        cfg.f0_min_hz,
        cfg.f0_max_hz
    );

    let pad = (2 * l).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(pad);
    let inv = planner.plan_fft_inverse(pad);
    let mut scratch = Vec::new();

    // Clip-level RMS gate, computed over all frames of this series.
    let total_sq: f64 = fs
        .frames()
        .iter()
        .flat_map(|f| f.iter())
        .map(|s| s * s)
        .sum();
    let clip_rms = (total_sq / (fs.len() * l) as f64).sqrt();
    let rms_gate = cfg.rms_floor.max(cfg.rms_rel_floor * clip_rms);

    let mut candidate_f0 = Vec::with_capacity(fs.len());
    let mut voiced = Vec::with_capacity(fs.len());
    for frame in fs.frames() {
        let nac = frame_nac(frame, lag_min, lag_max, &fwd, &inv, pad, &mut scratch);
        let (max_i, &best_v) = nac
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty lag range");
        // A periodic frame correlates equally well at every multiple of its
        // period, so a bare argmax lands on subharmonics at random. Take the
        // shortest-lag local peak that comes within 2% of the global one;
        // that is the fundamental whenever the frame is close to periodic.
        let best_i = if best_v > 0.0 {
            let floor = 0.98 * best_v;
            (0..nac.len())
                .find(|&i| {
                    nac[i] >= floor
                        && (i == 0 || nac[i] >= nac[i - 1])
                        && (i + 1 == nac.len() || nac[i] >= nac[i + 1])
                })
                .unwrap_or(max_i)
        } else {
            max_i
        };
        let best_lag = lag_min + best_i;

        // Parabolic refinement of the peak lag when both neighbors exist.
        let mut lag = best_lag as f64;
        if best_i > 0 && best_i + 1 < nac.len() {
            let (ym, y0, yp) = (nac[best_i - 1], nac[best_i], nac[best_i + 1]);
            let denom = ym - 2.0 * y0 + yp;
            if denom.abs() > 1e-12 {
                let delta = 0.5 * (ym - yp) / denom;
                lag += delta.clamp(-0.5, 0.5);
            }
        }
        candidate_f0.push(rate / lag);

        let frame_rms = (frame.iter().map(|s| s * s).sum::<f64>() / l as f64).sqrt();
        voiced.push(best_v >= cfg.nac_threshold && frame_rms >= rms_gate);
    }

    let voiced = median_filter_bool(&voiced, cfg.median_width);
    let f0 = candidate_f0
        .iter()
        .zip(&voiced)
        .map(|(&f, &v)| if v { f } else { 0.0 })
        .collect();

    (
        LldTrack {
            values: f0,
            hop_s: fs.hop_s(),
        },
        VoicingMask {
            voiced,
            hop_s: fs.hop_s(),
        },
    )
}

/// Majority vote over a centered window of odd width; edges replicate the
/// boundary value, which leaves runs at the very start/end untouched.
fn median_filter_bool(mask: &[bool], width: usize) -> Vec<bool> {
    assert!(width % 2 == 1, "median filter width must be odd, got {width}");
    if width == 1 || mask.len() <= 1 {
        return mask.to_vec();
    }
    let half = width as isize / 2;
    let n = mask.len() as isize;
    (0..n)
        .map(|i| {
            let mut trues = 0;
            for d in -half..=half {
                let j = (i + d).clamp(0, n - 1);
                trues += mask[j as usize] as usize;
            }
            trues * 2 > width
        })
        .collect()
}

/// Centered moving average of odd `window` length. Positions near the edges
/// average over however many neighbors exist, so the output length equals the
/// input length and a window of 1 is the identity.
pub fn smooth_sma(track: &LldTrack, window: usize) -> LldTrack {
    assert!(window % 2 == 1 && window >= 1, "window must be odd, got {window}");
    let n = track.values.len() as isize;
    let half = window as isize / 2;
    let values = (0..n)
        .map(|i| {
            let lo = (i - half).max(0);
            let hi = (i + half).min(n - 1);
            let sum: f64 = (lo..=hi).map(|j| track.values[j as usize]).sum();
            sum / (hi - lo + 1) as f64
        })
        .collect();
    LldTrack {
        values,
        hop_s: track.hop_s,
    }
}
