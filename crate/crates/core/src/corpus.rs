//! Corpus handling: utterance manifests, attack metadata, and the
//! deterministic train/eval pool split.
//!
//! A corpus is described by a tab-separated manifest with one row per
//! utterance:
//!
//! ```text
//! utt_id  path    label     attack  partition
//! u0001   wav/u0001.wav     bonafide        -       train
//! u0102   wav/u0102.wav     spoof   A09     dev
//! ```
//!
//! `path` is relative to the manifest's directory. `attack` is `-` for bona
//! fide rows and a known attack id (`A01`..`A16`) for spoof rows; the two must
//! agree with `label`. The `partition` column records which side of the
//! original train/dev corpus design an utterance came from, which is distinct
//! from the train/eval *pool* split this module computes on top of it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, XorShift64};

/// Ground-truth class of an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bonafide,
    Spoof,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Bonafide => "bonafide",
            Label::Spoof => "spoof",
        })
    }
}

/// Which block of the corpus design an utterance (or attack) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
        })
    }
}

/// Spoofing attack identifier, `A01` through `A16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttackId(u8);

impl AttackId {
    pub const ALL: [AttackId; 16] = {
        let mut out = [AttackId(1); 16];
        let mut i = 0;
        while i < 16 {
            out[i] = AttackId(i as u8 + 1);
            i += 1;
        }
        out
    };

    pub fn new(number: u8) -> Option<AttackId> {
        (1..=16).contains(&number).then_some(AttackId(number))
    }

    /// 1-based attack number (A09 -> 9).
    pub fn number(self) -> u8 {
        self.0
    }

    /// The corpus block this attack's utterances come from: A01-A08 belong to
    /// the train block, A09-A16 to the dev block.
    pub fn partition(self) -> Partition {
        if self.0 <= 8 {
            Partition::Train
        } else {
            Partition::Dev
        }
    }
}

impl fmt::Display for AttackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{:02}", self.0)
    }
}

impl FromStr for AttackId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix('A')
            .ok_or_else(|| Error::UnknownAttack(s.to_string()))?;
        if digits.len() != 2 {
            return Err(Error::UnknownAttack(s.to_string()));
        }
        let n: u8 = digits
            .parse()
            .map_err(|_| Error::UnknownAttack(s.to_string()))?;
        AttackId::new(n).ok_or_else(|| Error::UnknownAttack(s.to_string()))
    }
}

impl Serialize for AttackId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AttackId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Static metadata for one attack: the synthesis system behind it and the
/// system family it groups under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackInfo {
    pub attack: AttackId,
    pub system: &'static str,
    pub family: &'static str,
}

/// Lookup table row per attack: (system, family). Variants share their
/// parent's family, which is what the family-generalization analysis keys on.
const ATTACK_SYSTEMS: [(&str, &str); 16] = [
    ("GlowTTS", "GlowTTS"),
    ("Variant of A01", "GlowTTS"),
    ("Variant of A01", "GlowTTS"),
    ("GradTTS", "GradTTS"),
    ("Variant of A04", "GradTTS"),
    ("Variant of A04", "GradTTS"),
    ("FastPitch", "FastPitch"),
    ("VITS", "VITS"),
    ("ToucanTTS", "ToucanTTS"),
    ("A09 + HifiGANv2", "ToucanTTS"),
    ("Tacotron2", "Tacotron2"),
    ("In-house unit-selection", "unit-selection"),
    ("StarGANv2-VC", "StarGANv2-VC"),
    ("YourTTS", "YourTTS"),
    ("VAE-GAN", "VAE-GAN"),
    ("In-house ASR-based", "ASR-based"),
];

/// Metadata for a known attack id. The string form exists for CLI input; use
/// [`AttackInfo`] via an [`AttackId`] when you already have one.
pub fn attack_metadata(attack: AttackId) -> AttackInfo {
    let (system, family) = ATTACK_SYSTEMS[attack.number() as usize - 1];
    AttackInfo {
        attack,
        system,
        family,
    }
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtteranceRecord {
    pub utt_id: String,
    /// Audio path relative to the corpus root.
    pub path: String,
    pub label: Label,
    /// `Some` exactly when `label` is spoof.
    pub attack: Option<AttackId>,
    pub partition: Partition,
}

/// A parsed corpus: validated records plus the directory paths resolve
/// against.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub records: Vec<UtteranceRecord>,
}

impl Dataset {
    /// Absolute (root-joined) audio path for a record.
    pub fn audio_path(&self, rec: &UtteranceRecord) -> PathBuf {
        self.root.join(&rec.path)
    }

    /// All attacks that actually occur in this corpus, ascending.
    pub fn attacks_present(&self) -> Vec<AttackId> {
        let mut ids: Vec<AttackId> = self.records.iter().filter_map(|r| r.attack).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn get(&self, utt_id: &str) -> Option<&UtteranceRecord> {
        // Records are sorted by utt_id after parsing, so binary search works.
        self.records
            .binary_search_by(|r| r.utt_id.as_str().cmp(utt_id))
            .ok()
            .map(|i| &self.records[i])
    }
}

pub const MANIFEST_HEADER: &str = "utt_id\tpath\tlabel\tattack\tpartition";

/// Parse and validate a manifest file.
///
/// Rows are checked field-by-field with the offending line number in every
/// error. After parsing, records are sorted by `utt_id`; all downstream
/// iteration orders derive from that, which is what makes the pipeline output
/// independent of manifest row order.
pub fn parse_manifest(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let mk_err = |line: usize, msg: String| Error::Manifest {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == MANIFEST_HEADER => {}
        Some((_, header)) => {
            return Err(mk_err(
                1,
                format!("bad header {header:?}, expected {MANIFEST_HEADER:?}"),
            ))
        }
        None => return Err(mk_err(1, "empty manifest".into())),
    }

    let mut records = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(mk_err(
                lineno,
                format!("expected 5 tab-separated fields, found {}", fields.len()),
            ));
        }
        let [utt_id, rel_path, label_s, attack_s, partition_s] =
            [fields[0], fields[1], fields[2], fields[3], fields[4]];
        if utt_id.is_empty() {
            return Err(mk_err(lineno, "empty utt_id".into()));
        }
        if rel_path.is_empty() {
            return Err(mk_err(lineno, format!("utterance {utt_id:?} has an empty path")));
        }
        let label = match label_s {
            "bonafide" => Label::Bonafide,
            "spoof" => Label::Spoof,
            other => {
                return Err(mk_err(
                    lineno,
                    format!("unknown label {other:?} (expected bonafide or spoof)"),
                ))
            }
        };
        let attack = match (label, attack_s) {
            (Label::Bonafide, "-") => None,
            (Label::Bonafide, other) => {
                return Err(mk_err(
                    lineno,
                    format!("bonafide utterance {utt_id:?} must have attack '-', found {other:?}"),
                ))
            }
            (Label::Spoof, "-") => {
                return Err(mk_err(
                    lineno,
                    format!("spoof utterance {utt_id:?} is missing its attack id"),
                ))
            }
            (Label::Spoof, other) => Some(
                other
                    .parse::<AttackId>()
                    .map_err(|e| mk_err(lineno, e.to_string()))?,
            ),
        };
        let partition = match partition_s {
            "train" => Partition::Train,
            "dev" => Partition::Dev,
            other => {
                return Err(mk_err(
                    lineno,
                    format!("unknown partition {other:?} (expected train or dev)"),
                ))
            }
        };
        if let Some(first) = seen.insert(utt_id.to_string(), lineno) {
            return Err(mk_err(
                lineno,
                format!("duplicate utt_id {utt_id:?} (first seen on line {first})"),
            ));
        }
        records.push(UtteranceRecord {
            utt_id: utt_id.to_string(),
            path: rel_path.to_string(),
            label,
            attack,
            partition,
        });
    }

    if records.is_empty() {
        return Err(mk_err(1, "manifest has no utterance rows".into()));
    }
    records.sort_by(|a, b| a.utt_id.cmp(&b.utt_id));
    Ok(Dataset { root, records })
}

/// Which evaluation pool an utterance was assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    TrainPool,
    EvalPool,
}

/// Result of [`split_pools`]: every utterance mapped to one pool.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolAssignment {
    pub ratio: f64,
    pub seed: u64,
    assignment: BTreeMap<String, Pool>,
}

/// Serialized form of [`PoolAssignment`] (two sorted id lists).
#[derive(Serialize, Deserialize)]
struct PoolsFile {
    ratio: f64,
    seed: u64,
    train_pool: Vec<String>,
    eval_pool: Vec<String>,
}

impl PoolAssignment {
    pub fn pool_of(&self, utt_id: &str) -> Option<Pool> {
        self.assignment.get(utt_id).copied()
    }

    pub fn train_ids(&self) -> impl Iterator<Item = &str> {
        self.ids_in(Pool::TrainPool)
    }

    pub fn eval_ids(&self) -> impl Iterator<Item = &str> {
        self.ids_in(Pool::EvalPool)
    }

    fn ids_in(&self, pool: Pool) -> impl Iterator<Item = &str> {
        self.assignment
            .iter()
            .filter(move |(_, &p)| p == pool)
            .map(|(id, _)| id.as_str())
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn to_json(&self) -> String {
        let file = PoolsFile {
            ratio: self.ratio,
            seed: self.seed,
            train_pool: self.train_ids().map(String::from).collect(),
            eval_pool: self.eval_ids().map(String::from).collect(),
        };
        // Serialization of this struct cannot fail.
        serde_json::to_string_pretty(&file).expect("pool serialization")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<PoolAssignment> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PoolsFile = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut assignment = BTreeMap::new();
        for (ids, pool) in [
            (&file.train_pool, Pool::TrainPool),
            (&file.eval_pool, Pool::EvalPool),
        ] {
            for id in ids {
                if assignment.insert(id.clone(), pool).is_some() {
                    return Err(Error::InvalidInput(format!(
                        "pool file {}: utterance {id:?} appears twice",
                        path.display()
                    )));
                }
            }
        }
        Ok(PoolAssignment {
            ratio: file.ratio,
            seed: file.seed,
            assignment,
        })
    }
}

/// Stratum key for the pool split: bona fide utterances are stratified by
/// partition, spoof utterances by attack.
fn stratum_key(rec: &UtteranceRecord) -> String {
    match rec.attack {
        Some(a) => a.to_string(),
        None => match rec.partition {
            Partition::Train => "BT".to_string(),
            Partition::Dev => "BD".to_string(),
        },
    }
}

/// Split every stratum of the corpus into train/eval pools.
///
/// Within each stratum (each attack, and bona-train / bona-dev separately) the
/// utterance ids are sorted lexicographically, shuffled by Fisher-Yates with a
/// per-stratum seed, and the first `round(ratio * n)` (half-up) go to the
/// train pool. The per-stratum seed is `mix_seed([seed, fnv1a64(stratum)])`,
/// so the assignment within one stratum does not depend on what other strata
/// exist — adding an attack to a corpus leaves the other attacks' pools
/// untouched.
pub fn split_pools(ds: &Dataset, ratio: f64, seed: u64) -> Result<PoolAssignment> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidInput(format!(
            "split ratio must be in [0, 1], got {ratio}"
        )));
    }

    let mut strata: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for rec in &ds.records {
        strata
            .entry(stratum_key(rec))
            .or_default()
            .push(rec.utt_id.as_str());
    }

    let mut assignment = BTreeMap::new();
    for (key, mut ids) in strata {
        ids.sort_unstable();
        let stratum_seed = rng::mix_seed(&[seed, rng::fnv1a64(key.as_bytes())]);
        let mut prng = XorShift64::new(stratum_seed);
        rng::fisher_yates(&mut ids, &mut prng);
        // Round half-up; floor(x + 0.5) on a non-negative x.
        let n_train = ((ratio * ids.len() as f64) + 0.5).floor() as usize;
        for (i, id) in ids.into_iter().enumerate() {
            let pool = if i < n_train {
                Pool::TrainPool
            } else {
                Pool::EvalPool
            };
            assignment.insert(id.to_string(), pool);
        }
    }

    Ok(PoolAssignment {
        ratio,
        seed,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_manifest(dir: &Path, rows: &[&str]) -> PathBuf {
        let path = dir.join("manifest.tsv");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, "{MANIFEST_HEADER}").unwrap();
        for row in rows {
            writeln!(f, "{row}").unwrap();
        }
        path
    }

    fn demo_rows(n_per_group: usize) -> Vec<String> {
        let mut rows = Vec::new();
        for i in 0..n_per_group {
            rows.push(format!("bt{i:03}\twav/bt{i:03}.wav\tbonafide\t-\ttrain"));
            rows.push(format!("bd{i:03}\twav/bd{i:03}.wav\tbonafide\t-\tdev"));
            rows.push(format!("s1_{i:03}\twav/s1_{i:03}.wav\tspoof\tA01\ttrain"));
            rows.push(format!("s9_{i:03}\twav/s9_{i:03}.wav\tspoof\tA09\tdev"));
        }
        rows
    }

    #[test]
    fn parses_a_valid_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let rows = demo_rows(2);
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let path = write_manifest(dir.path(), &refs);
        let ds = parse_manifest(&path).unwrap();
        assert_eq!(ds.records.len(), 8);
        assert_eq!(ds.attacks_present(), vec!["A01".parse().unwrap(), "A09".parse().unwrap()]);
        let rec = ds.get("s9_001").unwrap();
        assert_eq!(rec.label, Label::Spoof);
        assert_eq!(rec.attack.unwrap().to_string(), "A09");
        assert_eq!(ds.audio_path(rec), dir.path().join("wav/s9_001.wav"));
    }

    #[test]
    fn rejects_malformed_rows_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(dir.path(), &["u1\twav/u1.wav\tbonafide\t-"]);
        let err = parse_manifest(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
        assert!(err.contains("5 tab-separated fields"), "{err}");
    }

    #[test]
    fn rejects_spoof_without_attack() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(dir.path(), &["u1\twav/u1.wav\tspoof\t-\ttrain"]);
        let err = parse_manifest(&path).unwrap_err().to_string();
        assert!(err.contains("missing its attack id"), "{err}");
    }

    #[test]
    fn rejects_bonafide_with_attack() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(dir.path(), &["u1\twav/u1.wav\tbonafide\tA02\ttrain"]);
        let err = parse_manifest(&path).unwrap_err().to_string();
        assert!(err.contains("must have attack '-'"), "{err}");
    }

    #[test]
    fn rejects_duplicate_utt_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(
            dir.path(),
            &[
                "u1\twav/u1.wav\tbonafide\t-\ttrain",
                "u1\twav/u1b.wav\tbonafide\t-\tdev",
            ],
        );
        let err = parse_manifest(&path).unwrap_err().to_string();
        assert!(err.contains("duplicate utt_id"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn rejects_unknown_attack_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(dir.path(), &["u1\twav/u1.wav\tspoof\tA17\ttrain"]);
        let err = parse_manifest(&path).unwrap_err().to_string();
        assert!(err.contains("A17"), "{err}");
        for bad in ["A00", "A1", "B01", "a01", "A011"] {
            assert!(bad.parse::<AttackId>().is_err(), "{bad} should not parse");
        }
        assert_eq!("A16".parse::<AttackId>().unwrap().number(), 16);
    }

    #[test]
    fn attack_metadata_matches_reference_rows() {
        let a01 = attack_metadata("A01".parse().unwrap());
        assert_eq!(a01.system, "GlowTTS");
        let a10 = attack_metadata("A10".parse().unwrap());
        assert_eq!(a10.system, "A09 + HifiGANv2");
        assert_eq!(a10.family, "ToucanTTS");
        let a14 = attack_metadata("A14".parse().unwrap());
        assert_eq!(a14.system, "YourTTS");
        // Variants share their parent family.
        assert_eq!(attack_metadata("A02".parse().unwrap()).family, "GlowTTS");
        assert_eq!(attack_metadata("A06".parse().unwrap()).family, "GradTTS");
    }

    #[test]
    fn attack_partitions_split_at_a08() {
        assert_eq!("A08".parse::<AttackId>().unwrap().partition(), Partition::Train);
        assert_eq!("A09".parse::<AttackId>().unwrap().partition(), Partition::Dev);
    }

    #[test]
    fn split_is_deterministic_and_stratified() {
        let dir = tempfile::tempdir().unwrap();
        let rows = demo_rows(10);
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let path = write_manifest(dir.path(), &refs);
        let ds = parse_manifest(&path).unwrap();

        let a = split_pools(&ds, 0.8, 42).unwrap();
        let b = split_pools(&ds, 0.8, 42).unwrap();
        assert_eq!(a, b);

        // Every utterance assigned exactly once.
        assert_eq!(a.len(), ds.records.len());

        // 10 per stratum at ratio 0.8 -> exactly 8 in the train pool.
        for prefix in ["bt", "bd", "s1_", "s9_"] {
            let in_train = a
                .train_ids()
                .filter(|id| id.starts_with(prefix))
                .count();
            assert_eq!(in_train, 8, "stratum {prefix}");
        }

        // A different seed must give a different assignment.
        let c = split_pools(&ds, 0.8, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_rounds_half_up() {
        let dir = tempfile::tempdir().unwrap();
        // 3 utterances in one stratum at ratio 0.5 -> round(1.5) = 2 in train.
        let path = write_manifest(
            dir.path(),
            &[
                "u1\tw/u1.wav\tbonafide\t-\ttrain",
                "u2\tw/u2.wav\tbonafide\t-\ttrain",
                "u3\tw/u3.wav\tbonafide\t-\ttrain",
            ],
        );
        let ds = parse_manifest(&path).unwrap();
        let pools = split_pools(&ds, 0.5, 1).unwrap();
        assert_eq!(pools.train_ids().count(), 2);
        assert_eq!(pools.eval_ids().count(), 1);
    }

    #[test]
    fn split_is_independent_across_strata() {
        // Removing one stratum must not change the assignment of the others.
        let dir = tempfile::tempdir().unwrap();
        let rows = demo_rows(10);
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let full = parse_manifest(&write_manifest(dir.path(), &refs)).unwrap();

        let no_a09: Vec<&str> = refs
            .iter()
            .filter(|r| !r.contains("A09"))
            .copied()
            .collect();
        let dir2 = tempfile::tempdir().unwrap();
        let reduced = parse_manifest(&write_manifest(dir2.path(), &no_a09)).unwrap();

        let p_full = split_pools(&full, 0.8, 42).unwrap();
        let p_reduced = split_pools(&reduced, 0.8, 42).unwrap();
        for rec in &reduced.records {
            assert_eq!(
                p_full.pool_of(&rec.utt_id),
                p_reduced.pool_of(&rec.utt_id),
                "{}",
                rec.utt_id
            );
        }
    }

    #[test]
    fn pools_json_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let rows = demo_rows(5);
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let ds = parse_manifest(&write_manifest(dir.path(), &refs)).unwrap();
        let pools = split_pools(&ds, 0.8, 42).unwrap();

        let out = dir.path().join("pools.json");
        pools.write(&out).unwrap();
        let loaded = PoolAssignment::read(&out).unwrap();
        assert_eq!(pools, loaded);

        // Key order and content of the file are part of the format.
        let text = fs::read_to_string(&out).unwrap();
        let ratio_pos = text.find("\"ratio\"").unwrap();
        let seed_pos = text.find("\"seed\"").unwrap();
        let train_pos = text.find("\"train_pool\"").unwrap();
        let eval_pos = text.find("\"eval_pool\"").unwrap();
        assert!(ratio_pos < seed_pos && seed_pos < train_pos && train_pos < eval_pos);
    }

    #[test]
    fn split_rejects_bad_ratio() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(dir.path(), &["u1\tw/u1.wav\tbonafide\t-\ttrain"]);
        let ds = parse_manifest(&path).unwrap();
        assert!(split_pools(&ds, 1.2, 0).is_err());
        assert!(split_pools(&ds, -0.1, 0).is_err());
    }
}
