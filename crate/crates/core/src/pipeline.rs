//! Batch feature extraction and the on-disk feature file.
//!
//! Features for a whole corpus live in a JSON-lines file, one object per
//! utterance, rows sorted by `utt_id`. Extraction over a corpus can fan out
//! across a thread pool — `extract_all` is pure — but the output is
//! byte-identical regardless of worker count because rows are emitted in
//! sorted order, not completion order.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;

use crate::audio::load_audio;
use crate::config::PipelineConfig;
use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::features::{extract_all, FeatureVector, REGISTRY_VERSION};

/// Features for a set of utterances, keyed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    registry_version: String,
    by_utt: BTreeMap<String, FeatureVector>,
}

impl FeatureTable {
    pub fn from_vectors(vectors: Vec<FeatureVector>) -> Result<Self> {
        let mut by_utt = BTreeMap::new();
        let mut version: Option<String> = None;
        for fv in vectors {
            fv.validate()?;
            match &version {
                None => version = Some(fv.registry_version.clone()),
                Some(v) if *v != fv.registry_version => {
                    return Err(Error::RegistryMismatch {
                        expected: v.clone(),
                        found: fv.registry_version.clone(),
                    });
                }
                Some(_) => {}
            }
            let id = fv.utt_id.clone();
            if by_utt.insert(id.clone(), fv).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate utterance {id:?} in feature set"
                )));
            }
        }
        let registry_version = version.ok_or_else(|| {
            Error::InvalidInput("feature set is empty".into())
        })?;
        Ok(FeatureTable {
            registry_version,
            by_utt,
        })
    }

    pub fn registry_version(&self) -> &str {
        &self.registry_version
    }

    /// Error unless the table was extracted by this registry.
    pub fn require_current(&self) -> Result<()> {
        if self.registry_version != REGISTRY_VERSION {
            return Err(Error::RegistryMismatch {
                expected: REGISTRY_VERSION.to_string(),
                found: self.registry_version.clone(),
            });
        }
        Ok(())
    }

    pub fn get(&self, utt_id: &str) -> Result<&FeatureVector> {
        self.by_utt
            .get(utt_id)
            .ok_or_else(|| Error::MissingUtterance(utt_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.by_utt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_utt.is_empty()
    }

    /// Iterate in utt_id order.
    pub fn iter(&self) -> impl Iterator<Item = &FeatureVector> {
        self.by_utt.values()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for fv in self.by_utt.values() {
            // Serialization of these plain structs cannot fail.
            out.push_str(&serde_json::to_string(fv).expect("feature vector serializes"));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vectors = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fv: FeatureVector = serde_json::from_str(&line).map_err(|e| Error::Manifest {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("bad feature row: {e}"),
            })?;
            vectors.push(fv);
        }
        FeatureTable::from_vectors(vectors)
    }
}

/// Extract features for every utterance of a corpus.
///
/// `jobs` is the worker count (≥ 1). Any clip failure aborts the batch with
/// that clip's error; the error names the file, so a bad corpus is
/// diagnosable from the message alone.
pub fn extract_corpus(ds: &Dataset, cfg: &PipelineConfig, jobs: usize) -> Result<FeatureTable> {
    if jobs == 0 {
        return Err(Error::InvalidInput("--jobs must be at least 1".into()));
    }
    if ds.records.is_empty() {
        return Err(Error::InvalidInput("corpus has no utterances".into()));
    }

    let extract_one = |rec: &crate::corpus::UtteranceRecord| -> Result<FeatureVector> {
        let clip = load_audio(&ds.audio_path(rec))?;
        let mut fv = extract_all(&clip, cfg)?;
        // The manifest id is authoritative; the file stem is just a default.
        fv.utt_id = rec.utt_id.clone();
        Ok(fv)
    };

    let vectors: Vec<FeatureVector> = if jobs == 1 {
        ds.records
            .iter()
            .map(extract_one)
            .collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
        pool.install(|| {
            ds.records
                .par_iter()
                .map(extract_one)
                .collect::<Result<Vec<_>>>()
        })?
    };

    FeatureTable::from_vectors(vectors)
}
