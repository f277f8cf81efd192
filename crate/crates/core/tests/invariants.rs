//! Cross-module invariant and property tests.
//!
//! These exercise the contracts that hold for *any* input — partition laws of
//! the pool split, framing arithmetic, gain invariance of flux, oracle
//! equivalence for EER — rather than worked examples, which live next to the
//! code they pin down.

use proptest::prelude::*;
use spoofprint::audio::{frame, load_audio, write_wav, AudioClip, Window};
use spoofprint::classify::{train_model, LinearModel, ScoreSet};
use spoofprint::config::{PipelineConfig, TrainerConfig};
use spoofprint::corpus::{parse_manifest, split_pools, Dataset, Pool, MANIFEST_HEADER};
use spoofprint::error::Error;
use spoofprint::eval::{compute_eer, Polarity};
use spoofprint::features::extract_all;
use spoofprint::lld::{f0_voicing_track, loudness_track, smooth_sma, spectral_flux_track, LldTrack};
use spoofprint::rng::XorShift64;
use spoofprint::corpus::Label;
use std::fmt::Write as _;
use std::path::PathBuf;

const RATE: u32 = 16_000;

fn write_manifest(dir: &std::path::Path, body: &str) -> PathBuf {
    let path = dir.join("manifest.tsv");
    std::fs::write(&path, format!("{MANIFEST_HEADER}\n{body}")).unwrap();
    path
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

// ---------------------------------------------------------------------------
// corpus: the pool split is a stratified, deterministic partition
// ---------------------------------------------------------------------------

/// Random manifest with bona train/dev groups and a random set of attacks.
fn random_manifest(rng: &mut XorShift64) -> String {
    let mut body = String::new();
    let n_bt = 1 + rng.next_below(20) as usize;
    let n_bd = 1 + rng.next_below(20) as usize;
    for i in 0..n_bt {
        writeln!(body, "bt{i:03}\twav/bt{i:03}.wav\tbonafide\t-\ttrain").unwrap();
    }
    for i in 0..n_bd {
        writeln!(body, "bd{i:03}\twav/bd{i:03}.wav\tbonafide\t-\tdev").unwrap();
    }
    for a in 1..=16u8 {
        if rng.next_below(3) == 0 {
            continue; // leave some attacks out
        }
        let n = 1 + rng.next_below(25) as usize;
        let part = if a <= 8 { "train" } else { "dev" };
        for i in 0..n {
            writeln!(body, "s{a:02}_{i:03}\twav/s{a:02}_{i:03}.wav\tspoof\tA{a:02}\t{part}").unwrap();
        }
    }
    body
}

fn stratum_ids(ds: &Dataset) -> Vec<(String, Vec<String>)> {
    use std::collections::BTreeMap;
    let mut strata: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for rec in &ds.records {
        let key = match rec.attack {
            Some(a) => a.to_string(),
            None => match rec.partition {
                spoofprint::corpus::Partition::Train => "BT".into(),
                spoofprint::corpus::Partition::Dev => "BD".into(),
            },
        };
        strata.entry(key).or_default().push(rec.utt_id.clone());
    }
    strata.into_iter().collect()
}

#[test]
fn pool_split_is_a_stratified_partition() {
    let mut rng = XorShift64::new(0xC0FFEE);
    for round in 0..30 {
        let dir = tempfile::tempdir().unwrap();
        let body = random_manifest(&mut rng);
        let ds = parse_manifest(&write_manifest(dir.path(), &body)).unwrap();
        let ratio = [0.8, 0.5, 0.66][round % 3];
        let pools = split_pools(&ds, ratio, 1000 + round as u64).unwrap();

        // Partition: every record lands in exactly one pool.
        assert_eq!(pools.len(), ds.records.len());
        for rec in &ds.records {
            assert!(pools.pool_of(&rec.utt_id).is_some(), "unassigned {}", rec.utt_id);
        }
        let n_train = pools.train_ids().count();
        let n_eval = pools.eval_ids().count();
        assert_eq!(n_train + n_eval, ds.records.len());

        // Stratification: each stratum contributes round(ratio * n) to train.
        for (key, ids) in stratum_ids(&ds) {
            let in_train = ids
                .iter()
                .filter(|id| pools.pool_of(id) == Some(Pool::TrainPool))
                .count();
            let want = round_half_up(ratio * ids.len() as f64);
            assert_eq!(in_train, want, "stratum {key} round {round}");
        }
    }
}

#[test]
fn pool_split_depends_only_on_content_ratio_and_seed() {
    let mut rng = XorShift64::new(7);
    let body = random_manifest(&mut rng);

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let ds_a = parse_manifest(&write_manifest(dir_a.path(), &body)).unwrap();
    let ds_b = parse_manifest(&write_manifest(dir_b.path(), &body)).unwrap();

    let p_a = split_pools(&ds_a, 0.8, 42).unwrap();
    let p_b = split_pools(&ds_b, 0.8, 42).unwrap();
    for rec in &ds_a.records {
        assert_eq!(p_a.pool_of(&rec.utt_id), p_b.pool_of(&rec.utt_id));
    }

    // A different seed reshuffles (with ~40 ids per stratum a collision of
    // every stratum at once is vanishingly unlikely).
    let mut big = String::new();
    for i in 0..40 {
        writeln!(big, "bt{i:03}\twav/x.wav\tbonafide\t-\ttrain").unwrap();
    }
    let dir_c = tempfile::tempdir().unwrap();
    let ds_c = parse_manifest(&write_manifest(dir_c.path(), &big)).unwrap();
    let p1 = split_pools(&ds_c, 0.5, 1).unwrap();
    let p2 = split_pools(&ds_c, 0.5, 2).unwrap();
    assert!(
        ds_c.records
            .iter()
            .any(|r| p1.pool_of(&r.utt_id) != p2.pool_of(&r.utt_id)),
        "seed change left the split untouched"
    );
}

// ---------------------------------------------------------------------------
// audio: write/load round trip and framing arithmetic
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wav_round_trip_stays_within_quantization(
        samples in prop::collection::vec(-0.999f64..0.999, 1..3000),
        rate in prop::sample::select(vec![8_000u32, 16_000, 44_100]),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.wav");
        let clip = AudioClip::new("rt", rate, samples.clone()).unwrap();
        write_wav(&clip, &path).unwrap();
        let back = load_audio(&path).unwrap();
        prop_assert_eq!(back.len(), samples.len());
        prop_assert_eq!(back.sample_rate_hz, rate);
        for (a, b) in samples.iter().zip(back.samples()) {
            prop_assert!((a - b).abs() <= 1.0 / 32768.0, "{a} vs {b}");
        }
    }

    #[test]
    fn frame_count_follows_the_formula(
        n in 1usize..6000,
        l in 1usize..500,
        h in 1usize..120,
    ) {
        let samples = vec![0.25f64; n];
        let clip = AudioClip::new("f", RATE, samples).unwrap();
        let res = frame(&clip, l as f64 / RATE as f64, h as f64 / RATE as f64, Window::Rect);
        if n < l {
            let too_short = matches!(res, Err(Error::ClipTooShort { .. }));
            prop_assert!(too_short);
        } else {
            let fs = res.unwrap();
            prop_assert_eq!(fs.len(), 1 + (n - l) / h);
            for f in fs.frames() {
                prop_assert_eq!(f.len(), l);
            }
        }
    }

    #[test]
    fn smoothing_respects_track_bounds(
        values in prop::collection::vec(-100.0f64..100.0, 1..200),
        window in prop::sample::select(vec![1usize, 3, 5, 9]),
    ) {
        let track = LldTrack { values: values.clone(), hop_s: 0.01 };
        let out = smooth_sma(&track, window);
        prop_assert_eq!(out.values.len(), values.len());
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for v in &out.values {
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12, "{v} outside [{lo}, {hi}]");
        }
    }
}

// ---------------------------------------------------------------------------
// lld: alignment, gain invariance, silence behavior
// ---------------------------------------------------------------------------

fn noise_clip(rng: &mut XorShift64, n: usize, amp: f64) -> AudioClip {
    let samples: Vec<f64> = (0..n).map(|_| amp * (2.0 * rng.next_f64() - 1.0)).collect();
    AudioClip::new("noise", RATE, samples).unwrap()
}

#[test]
fn loudness_and_flux_share_the_frame_grid() {
    let mut rng = XorShift64::new(11);
    for _ in 0..10 {
        let n = 1600 + rng.next_below(30_000) as usize;
        let clip = noise_clip(&mut rng, n, 0.4);
        let fs = frame(&clip, 0.025, 0.010, Window::Hann).unwrap();
        let loud = loudness_track(&fs);
        let flux = spectral_flux_track(&fs);
        assert_eq!(loud.values.len(), fs.len());
        assert_eq!(flux.values.len(), fs.len());
        assert!((loud.hop_s - flux.hop_s).abs() < 1e-15);
    }
}

#[test]
fn spectral_flux_ignores_global_gain() {
    let mut rng = XorShift64::new(12);
    let base = noise_clip(&mut rng, 8000, 0.003);
    let reference = spectral_flux_track(&frame(&base, 0.025, 0.010, Window::Hann).unwrap());
    for c in [0.01, 0.37, 5.0, 250.0] {
        let scaled: Vec<f64> = base.samples().iter().map(|s| s * c).collect();
        let clip = AudioClip::new("scaled", RATE, scaled).unwrap();
        let flux = spectral_flux_track(&frame(&clip, 0.025, 0.010, Window::Hann).unwrap());
        assert_eq!(flux.values.len(), reference.values.len());
        for (a, b) in reference.values.iter().zip(&flux.values) {
            assert!((a - b).abs() < 1e-9, "gain {c}: {a} vs {b}");
        }
    }
}

fn sawtooth(n: usize, f0: f64, amp: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let phase = (f0 * i as f64 / RATE as f64).fract();
            amp * (2.0 * phase - 1.0)
        })
        .collect()
}

#[test]
fn appended_silence_is_unvoiced() {
    let cfg = PipelineConfig::default();
    let mut samples = sawtooth(8000, 150.0, 0.5);
    samples.extend(std::iter::repeat(0.0).take(11_200)); // 0.7 s of silence
    let clip = AudioClip::new("tail", RATE, samples).unwrap();
    let fs = frame(&clip, cfg.frame.f0_len_s, cfg.frame.hop_s, Window::Rect).unwrap();
    let (_, mask) = f0_voicing_track(&fs, &cfg.voicing);

    // Frames fully inside the appended region (one hop of slack for the
    // median filter at the boundary) must be unvoiced; the tone itself must
    // have registered as voiced.
    let hop = 160;
    let first_silent_frame = 8000 / hop + 1;
    for (t, &v) in mask.voiced.iter().enumerate() {
        if t >= first_silent_frame {
            assert!(!v, "frame {t} in the silent tail is voiced");
        }
    }
    assert!(mask.voiced[..40].iter().any(|&v| v), "tone never voiced");
}

// ---------------------------------------------------------------------------
// features: totality and oracle equivalence under time shifts
// ---------------------------------------------------------------------------

#[test]
fn implemented_slots_never_leak_non_finite_values() {
    let cfg = PipelineConfig::default();
    let mut rng = XorShift64::new(21);
    let mut clips = vec![
        AudioClip::new("sine", RATE, (0..16_000).map(|i| {
            0.5 * (2.0 * std::f64::consts::PI * 200.0 * i as f64 / RATE as f64).sin()
        }).collect()).unwrap(),
        AudioClip::new("dc", RATE, vec![0.4; 8000]).unwrap(),
        AudioClip::new("silence", RATE, vec![0.0; 8000]).unwrap(),
        AudioClip::new("short", RATE, vec![0.1; 1760]).unwrap(),
        AudioClip::new("saw", RATE, sawtooth(12_000, 120.0, 0.5)).unwrap(),
    ];
    clips.push(noise_clip(&mut rng, 9600, 0.1));
    for clip in &clips {
        let fv = extract_all(clip, &cfg).unwrap();
        fv.validate().unwrap();
        for (i, v) in fv.values.iter().enumerate() {
            if let Some(v) = v {
                assert!(v.is_finite(), "{}: slot {i} = {v}", clip.utt_id);
            }
            if fv.is_flagged(i) {
                assert_eq!(fv.value(i).unwrap(), 0.0, "{}: flagged slot {i}", clip.utt_id);
            }
        }
    }
}

#[test]
fn leading_silence_shifts_f85_exactly_as_the_mask_predicts() {
    let cfg = PipelineConfig::default();
    let mut base = sawtooth(4800, 150.0, 0.5);
    base.extend(std::iter::repeat(0.0).take(4000));
    base.extend(sawtooth(4800, 150.0, 0.5));

    for pad_hops in [0usize, 3, 10] {
        let mut samples = vec![0.0; pad_hops * 160];
        samples.extend(&base);
        let clip = AudioClip::new("padded", RATE, samples).unwrap();

        // The independent path: build the mask with the lld entry points and
        // average unvoiced run lengths by hand.
        let fs = frame(&clip, cfg.frame.f0_len_s, cfg.frame.hop_s, Window::Rect).unwrap();
        let (_, mask) = f0_voicing_track(&fs, &cfg.voicing);
        let mut runs: Vec<f64> = Vec::new();
        let mut start = 0;
        for i in 1..=mask.voiced.len() {
            if i == mask.voiced.len() || mask.voiced[i] != mask.voiced[start] {
                if !mask.voiced[start] {
                    runs.push((i - start) as f64 * mask.hop_s);
                }
                start = i;
            }
        }
        let expected = runs.iter().sum::<f64>() / runs.len() as f64;

        let fv = extract_all(&clip, &cfg).unwrap();
        let got = fv.value(85).unwrap();
        assert!(
            (got - expected).abs() < 1e-12,
            "pad {pad_hops}: F85 {got} vs oracle {expected}"
        );
    }
}

// ---------------------------------------------------------------------------
// classify: standardization algebra and loss descent
// ---------------------------------------------------------------------------

#[test]
fn score_follows_the_standardization_algebra() {
    let mut rng = XorShift64::new(31);
    for _ in 0..100 {
        let d = 1 + rng.next_below(4) as usize;
        let w: Vec<f64> = (0..d).map(|_| rng.next_gaussian()).collect();
        let means: Vec<f64> = (0..d).map(|_| 5.0 * rng.next_gaussian()).collect();
        let stds: Vec<f64> = (0..d).map(|_| 0.1 + 3.0 * rng.next_f64()).collect();
        let b = rng.next_gaussian();
        let model = LinearModel {
            feature_indices: (0..d).collect(),
            weights: w.clone(),
            bias: b,
            means: means.clone(),
            stds: stds.clone(),
            registry_version: "egemaps-subset-1".into(),
            trained_on: None,
        };
        let x: Vec<f64> = (0..d).map(|_| 4.0 * rng.next_gaussian()).collect();
        let want: f64 = x
            .iter()
            .zip(&w)
            .zip(means.iter().zip(&stds))
            .map(|((xi, wi), (mi, si))| wi * (xi - mi) / si)
            .sum::<f64>()
            + b;
        let got = model.score(&x).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));

        // Shifting x by sigma-scaled deltas moves the score by w . delta.
        let delta: Vec<f64> = (0..d).map(|_| rng.next_gaussian()).collect();
        let shifted: Vec<f64> = x
            .iter()
            .zip(stds.iter().zip(&delta))
            .map(|(xi, (si, di))| xi + si * di)
            .collect();
        let moved = model.score(&shifted).unwrap();
        let dot: f64 = w.iter().zip(&delta).map(|(a, b)| a * b).sum();
        assert!((moved - got - dot).abs() <= 1e-9 * dot.abs().max(1.0));
    }
}

#[test]
fn training_loss_never_increases_on_random_data() {
    let mut rng = XorShift64::new(41);
    let cfg = TrainerConfig::default();
    for round in 0..20 {
        let d = 1 + rng.next_below(3) as usize;
        let n_per = 3 + rng.next_below(18) as usize;
        // Even rounds have real separation, odd rounds are pure noise.
        let sep = if round % 2 == 0 { 1.5 } else { 0.0 };
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_per {
            rows.push((0..d).map(|_| rng.next_gaussian()).collect::<Vec<f64>>());
            labels.push(Label::Bonafide);
            rows.push((0..d).map(|_| sep + rng.next_gaussian()).collect::<Vec<f64>>());
            labels.push(Label::Spoof);
        }
        let indices: Vec<usize> = (0..d).collect();
        let out = train_model(&rows, &labels, &indices, "egemaps-subset-1", &cfg).unwrap();
        for pair in out.losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12 * pair[0].abs().max(1.0),
                "round {round}: loss rose {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }
}

// ---------------------------------------------------------------------------
// eval: EER against an exhaustive oracle
// ---------------------------------------------------------------------------

/// Independent EER: enumerate every midpoint threshold, compute both error
/// rates by direct counting, and interpolate the crossing. Quadratic and
/// straight from the definition.
fn oracle_eer(bona: &[f64], spoof: &[f64]) -> f64 {
    let mut uniq: Vec<f64> = bona.iter().chain(spoof).cloned().collect();
    uniq.sort_by(f64::total_cmp);
    uniq.dedup();
    let mut thresholds = vec![uniq[0] - 1.0];
    for pair in uniq.windows(2) {
        thresholds.push((pair[0] + pair[1]) / 2.0);
    }
    thresholds.push(uniq[uniq.len() - 1] + 1.0);

    let rates: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&t| {
            let fpr = bona.iter().filter(|&&s| s >= t).count() as f64 / bona.len() as f64;
            let fnr = spoof.iter().filter(|&&s| s < t).count() as f64 / spoof.len() as f64;
            (fpr, fnr)
        })
        .collect();
    for j in 0..rates.len() - 1 {
        let d0 = rates[j].0 - rates[j].1;
        let d1 = rates[j + 1].0 - rates[j + 1].1;
        if d0 >= 0.0 && d1 <= 0.0 {
            let alpha = if d0 == d1 { 0.0 } else { d0 / (d0 - d1) };
            let eer = rates[j].0 + alpha * (rates[j + 1].0 - rates[j].0);
            return 100.0 * eer;
        }
    }
    unreachable!("no crossing found");
}

fn random_set(rng: &mut XorShift64, quantized: bool) -> (Vec<f64>, Vec<f64>) {
    let n_b = 1 + rng.next_below(25) as usize;
    let n_s = 1 + rng.next_below(25) as usize;
    let draw = |rng: &mut XorShift64, shift: f64| {
        let v = shift + 2.0 * rng.next_gaussian();
        if quantized {
            (v * 2.0).round() / 2.0
        } else {
            v
        }
    };
    let bona: Vec<f64> = (0..n_b).map(|_| draw(rng, 0.0)).collect();
    let spoof: Vec<f64> = (0..n_s).map(|_| draw(rng, 1.0)).collect();
    (bona, spoof)
}

fn score_set(bona: &[f64], spoof: &[f64]) -> ScoreSet {
    let items = bona
        .iter()
        .map(|&s| (s, Label::Bonafide))
        .chain(spoof.iter().map(|&s| (s, Label::Spoof)))
        .collect();
    ScoreSet::new(items).unwrap()
}

#[test]
fn compute_eer_matches_the_exhaustive_oracle() {
    let mut rng = XorShift64::new(51);
    for round in 0..200 {
        let (bona, spoof) = random_set(&mut rng, round % 2 == 0);
        let s = score_set(&bona, &spoof);

        let fixed = compute_eer(&s, Polarity::FixedHigherIsSpoof);
        let want = oracle_eer(&bona, &spoof);
        assert!(
            (fixed.eer_percent - want).abs() < 1e-9,
            "round {round}: {} vs oracle {want}",
            fixed.eer_percent
        );

        let bob = compute_eer(&s, Polarity::BestOfBoth);
        let neg_b: Vec<f64> = bona.iter().map(|v| -v).collect();
        let neg_s: Vec<f64> = spoof.iter().map(|v| -v).collect();
        let want_bob = want.min(oracle_eer(&neg_b, &neg_s));
        assert!(
            (bob.eer_percent - want_bob).abs() < 1e-9,
            "round {round}: best-of-both {} vs oracle {want_bob}",
            bob.eer_percent
        );
        assert!(bob.eer_percent <= 50.0 + 1e-9);
    }
}

#[test]
fn eer_is_invariant_under_monotone_maps() {
    let mut rng = XorShift64::new(61);
    for round in 0..60 {
        let (bona, spoof) = random_set(&mut rng, round % 3 == 0);
        let s = score_set(&bona, &spoof);

        // y = b + s0*x + sum_j a_j * relu(x - k_j): strictly increasing.
        let s0 = 0.1 + 2.0 * rng.next_f64();
        let b = 3.0 * rng.next_gaussian();
        let knots: Vec<(f64, f64)> = (0..3)
            .map(|_| (4.0 * rng.next_gaussian(), 3.0 * rng.next_f64()))
            .collect();
        let map = |x: f64| -> f64 {
            b + s0 * x
                + knots
                    .iter()
                    .map(|&(k, a)| a * (x - k).max(0.0))
                    .sum::<f64>()
        };
        let m_bona: Vec<f64> = bona.iter().map(|&v| map(v)).collect();
        let m_spoof: Vec<f64> = spoof.iter().map(|&v| map(v)).collect();
        let m = score_set(&m_bona, &m_spoof);

        for polarity in [Polarity::FixedHigherIsSpoof, Polarity::BestOfBoth] {
            let before = compute_eer(&s, polarity).eer_percent;
            let after = compute_eer(&m, polarity).eer_percent;
            assert!(
                (before - after).abs() < 1e-9,
                "round {round} {polarity:?}: {before} vs {after}"
            );
        }
    }
}

#[test]
fn negating_scores_complements_the_fixed_eer() {
    let mut rng = XorShift64::new(71);
    for round in 0..100 {
        // Tie-free by construction: continuous draws plus a distinct nudge.
        let (mut bona, mut spoof) = random_set(&mut rng, false);
        for (i, v) in bona.iter_mut().enumerate() {
            *v += i as f64 * 1e-7;
        }
        for (i, v) in spoof.iter_mut().enumerate() {
            *v += (i as f64 + 0.5) * 1e-7;
        }
        let s = score_set(&bona, &spoof);
        let neg = score_set(
            &bona.iter().map(|v| -v).collect::<Vec<_>>(),
            &spoof.iter().map(|v| -v).collect::<Vec<_>>(),
        );
        let fwd = compute_eer(&s, Polarity::FixedHigherIsSpoof).eer_percent;
        let rev = compute_eer(&neg, Polarity::FixedHigherIsSpoof).eer_percent;
        assert!(
            (fwd + rev - 100.0).abs() < 1e-9,
            "round {round}: {fwd} + {rev} != 100"
        );
        let neg_b: Vec<f64> = bona.iter().map(|v| -v).collect();
        let neg_s: Vec<f64> = spoof.iter().map(|v| -v).collect();
        assert!((rev - oracle_eer(&neg_b, &neg_s)).abs() < 1e-9);
    }
}
