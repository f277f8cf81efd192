//! Equal-error-rate computation and the three evaluation protocols.
//!
//! Everything here reduces to one primitive: sweep a threshold over a set of
//! labeled scores and find where the false-positive rate (bona fide scored as
//! spoof) crosses the false-negative rate (spoof let through). On top of that
//! sit the protocols: per-feature ranking against one attack, the in-domain
//! table of top-k features per attack, the out-of-domain matrix that reuses
//! each trained model against every other attack, and per-column scoring of
//! an external embedding matrix.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::{raw_feature_scores, train_model, LinearModel, ScoreSet};
use crate::config::PipelineConfig;
use crate::corpus::{attack_metadata, AttackId, Dataset, Label, Partition, Pool, PoolAssignment};
use crate::error::{Error, Result};
use crate::features::registry;
use crate::pipeline::FeatureTable;

/// Which scoring direction the threshold sweep assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Higher score means spoof — the convention models are trained with.
    /// Under a badly transferred model the EER can exceed 50%.
    FixedHigherIsSpoof,
    /// Try both directions, report the better one (≤ 50% by construction).
    /// Used for raw feature values, whose direction is unknown a priori.
    BestOfBoth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EerResult {
    pub eer_percent: f64,
    /// Score-space operating point where the error rates cross.
    pub threshold: f64,
}

/// EER with the "higher = spoof" convention.
fn eer_fixed(s: &ScoreSet) -> EerResult {
    let mut bona = s.class_scores(Label::Bonafide);
    let mut spoof = s.class_scores(Label::Spoof);
    bona.sort_by(f64::total_cmp);
    spoof.sort_by(f64::total_cmp);

    let mut uniq: Vec<f64> = bona.iter().chain(spoof.iter()).copied().collect();
    uniq.sort_by(f64::total_cmp);
    uniq.dedup();

    // Sweep thresholds: below all scores, midpoints between neighbors, above
    // all scores. FPR starts at 1 and falls; FNR starts at 0 and rises.
    let mut thresholds = Vec::with_capacity(uniq.len() + 1);
    thresholds.push(uniq[0] - 1.0);
    thresholds.extend(uniq.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    thresholds.push(uniq[uniq.len() - 1] + 1.0);

    let frac_at_least = |sorted: &[f64], t: f64| -> f64 {
        let below = sorted.partition_point(|&v| v < t);
        (sorted.len() - below) as f64 / sorted.len() as f64
    };

    let fpr: Vec<f64> = thresholds.iter().map(|&t| frac_at_least(&bona, t)).collect();
    let fnr: Vec<f64> = thresholds.iter().map(|&t| 1.0 - frac_at_least(&spoof, t)).collect();

    // d = FPR - FNR runs monotonically from +1 to -1; find its sign change
    // and interpolate linearly inside that interval.
    for i in 0..thresholds.len() - 1 {
        let d0 = fpr[i] - fnr[i];
        let d1 = fpr[i + 1] - fnr[i + 1];
        if d0 >= 0.0 && d1 <= 0.0 {
            let alpha = if d0 == d1 { 0.0 } else { d0 / (d0 - d1) };
            let eer = fpr[i] + alpha * (fpr[i + 1] - fpr[i]);
            let threshold = thresholds[i] + alpha * (thresholds[i + 1] - thresholds[i]);
            return EerResult {
                eer_percent: 100.0 * eer,
                threshold,
            };
        }
    }
    unreachable!("FPR-FNR crosses zero somewhere between the sentinels");
}

/// Equal error rate of a score set.
pub fn compute_eer(s: &ScoreSet, polarity: Polarity) -> EerResult {
    match polarity {
        Polarity::FixedHigherIsSpoof => eer_fixed(s),
        Polarity::BestOfBoth => {
            let forward = eer_fixed(s);
            let reversed = eer_fixed(&s.negated());
            if reversed.eer_percent < forward.eer_percent {
                EerResult {
                    eer_percent: reversed.eer_percent,
                    // Map the operating point back into original score space:
                    // "-score >= t" is "score <= -t".
                    threshold: -reversed.threshold,
                }
            } else {
                forward
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Pool plumbing shared by the protocols
// ---------------------------------------------------------------------------

fn pool_of(pools: &PoolAssignment, utt_id: &str) -> Result<Pool> {
    pools.pool_of(utt_id).ok_or_else(|| {
        Error::InvalidInput(format!(
            "utterance {utt_id:?} is not in the pool assignment (stale pools file?)"
        ))
    })
}

/// Utterances for one side of a protocol comparison: all bona fide plus one
/// attack's spoofs, restricted to the given pool. Order follows the dataset's
/// sorted records, so every caller assembles scores identically.
fn protocol_utts<'d>(
    ds: &'d Dataset,
    pools: &PoolAssignment,
    attack: AttackId,
    pool: Pool,
) -> Result<Vec<(&'d str, Label)>> {
    if !ds.attacks_present().contains(&attack) {
        return Err(Error::AttackAbsent(attack.to_string()));
    }
    let mut out = Vec::new();
    for rec in &ds.records {
        let wanted = match rec.label {
            Label::Bonafide => true,
            Label::Spoof => rec.attack == Some(attack),
        };
        if wanted && pool_of(pools, &rec.utt_id)? == pool {
            out.push((rec.utt_id.as_str(), rec.label));
        }
    }
    Ok(out)
}

fn feature_values(
    features: &FeatureTable,
    utts: &[(&str, Label)],
    index: usize,
) -> Result<(Vec<f64>, Vec<Label>)> {
    let mut values = Vec::with_capacity(utts.len());
    let mut labels = Vec::with_capacity(utts.len());
    for (utt_id, label) in utts {
        values.push(features.get(utt_id)?.value(index)?);
        labels.push(*label);
    }
    Ok((values, labels))
}

// ---------------------------------------------------------------------------
// Feature ranking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub index: usize,
    pub name: String,
    /// Training-pool EER of the raw feature values, best polarity.
    pub train_eer_percent: f64,
}

/// Rank every implemented feature by how well its raw values separate bona
/// fide from one attack on the training pools. Returns the best `k`,
/// ascending EER, ties broken toward the lower index.
pub fn rank_features(
    ds: &Dataset,
    features: &FeatureTable,
    pools: &PoolAssignment,
    attack: AttackId,
    k: usize,
) -> Result<Vec<RankedFeature>> {
    features.require_current()?;
    let utts = protocol_utts(ds, pools, attack, Pool::TrainPool)?;
    let mut ranked = Vec::new();
    for def in registry().defs().iter().filter(|d| d.implemented()) {
        let (values, labels) = feature_values(features, &utts, def.index)?;
        let scores = raw_feature_scores(&values, &labels)?;
        let eer = compute_eer(&scores, Polarity::BestOfBoth);
        ranked.push(RankedFeature {
            index: def.index,
            name: def.name.clone(),
            train_eer_percent: eer.eer_percent,
        });
    }
    ranked.sort_by(|a, b| {
        a.train_eer_percent
            .total_cmp(&b.train_eer_percent)
            .then(a.index.cmp(&b.index))
    });
    ranked.truncate(k);
    Ok(ranked)
}

// ---------------------------------------------------------------------------
// In-domain protocol
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdRow {
    pub attack: AttackId,
    pub feature_index: usize,
    pub feature_name: String,
    /// Raw-value ranking EER on the training pool.
    pub train_eer_percent: f64,
    /// Trained-model EER on the evaluation pool, fixed polarity.
    pub test_eer_percent: f64,
    pub model: LinearModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdTable {
    pub rows: Vec<IdRow>,
}

impl IdTable {
    pub fn attacks(&self) -> Vec<AttackId> {
        let mut a: Vec<AttackId> = self.rows.iter().map(|r| r.attack).collect();
        a.sort_unstable();
        a.dedup();
        a
    }
}

/// Evaluate a trained model against one attack's evaluation pool.
fn model_eer_on(
    ds: &Dataset,
    features: &FeatureTable,
    pools: &PoolAssignment,
    model: &LinearModel,
    attack: AttackId,
) -> Result<f64> {
    let utts = protocol_utts(ds, pools, attack, Pool::EvalPool)?;
    let mut items = Vec::with_capacity(utts.len());
    for (utt_id, label) in utts {
        let fv = features.get(utt_id)?;
        let row: Vec<f64> = model
            .feature_indices
            .iter()
            .map(|&i| fv.value(i))
            .collect::<Result<_>>()?;
        items.push((model.score(&row)?, label));
    }
    let scores = ScoreSet::new(items)?;
    Ok(compute_eer(&scores, Polarity::FixedHigherIsSpoof).eer_percent)
}

/// The in-domain protocol: per attack, rank features on the training pool,
/// train a 1-D model for each of the top `k`, and report its fixed-polarity
/// EER on the held-out evaluation pool.
pub fn run_id_protocol(
    ds: &Dataset,
    features: &FeatureTable,
    pools: &PoolAssignment,
    attacks: &[AttackId],
    k: usize,
    cfg: &PipelineConfig,
) -> Result<IdTable> {
    features.require_current()?;
    let mut rows = Vec::new();
    let mut attacks = attacks.to_vec();
    attacks.sort_unstable();
    attacks.dedup();
    for &attack in &attacks {
        let ranked = rank_features(ds, features, pools, attack, k)?;
        let train_utts = protocol_utts(ds, pools, attack, Pool::TrainPool)?;
        for rf in ranked {
            let (values, labels) = feature_values(features, &train_utts, rf.index)?;
            let rows_1d: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
            let outcome = train_model(
                &rows_1d,
                &labels,
                &[rf.index],
                features.registry_version(),
                &cfg.trainer,
            )?;
            let mut model = outcome.model;
            model.trained_on = Some(attack.to_string());
            let test = model_eer_on(ds, features, pools, &model, attack)?;
            rows.push(IdRow {
                attack,
                feature_index: rf.index,
                feature_name: rf.name,
                train_eer_percent: rf.train_eer_percent,
                test_eer_percent: test,
                model,
            });
        }
    }
    Ok(IdTable { rows })
}

// ---------------------------------------------------------------------------
// Out-of-domain protocol
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodRow {
    pub train_attack: AttackId,
    pub feature_index: usize,
    pub feature_name: String,
    /// One EER per entry of `OodMatrix::eval_attacks`.
    pub cells: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodMatrix {
    pub eval_attacks: Vec<AttackId>,
    pub rows: Vec<OodRow>,
}

impl OodMatrix {
    pub fn cell(&self, row: usize, eval_attack: AttackId) -> Option<f64> {
        let col = self.eval_attacks.iter().position(|&a| a == eval_attack)?;
        self.rows.get(row).map(|r| r.cells[col])
    }
}

/// The out-of-domain protocol: every model trained by the in-domain run is
/// evaluated against every attack's evaluation pool. Models are reused as
/// trained — feature choice, weights, and polarity all come from the original
/// attack — so transfer failures show up as EERs above 50%. The diagonal
/// repeats the in-domain computation and is exactly equal to it.
pub fn run_ood_protocol(
    ds: &Dataset,
    features: &FeatureTable,
    pools: &PoolAssignment,
    id: &IdTable,
) -> Result<OodMatrix> {
    features.require_current()?;
    let eval_attacks = id.attacks();
    let mut rows = Vec::new();
    for id_row in &id.rows {
        let mut cells = Vec::with_capacity(eval_attacks.len());
        for &eval_attack in &eval_attacks {
            cells.push(model_eer_on(ds, features, pools, &id_row.model, eval_attack)?);
        }
        rows.push(OodRow {
            train_attack: id_row.attack,
            feature_index: id_row.feature_index,
            feature_name: id_row.feature_name.clone(),
            cells,
        });
    }
    Ok(OodMatrix { eval_attacks, rows })
}

// ---------------------------------------------------------------------------
// Embedding columns
// ---------------------------------------------------------------------------

/// An external per-utterance embedding (e.g. 768 scalar outputs of some
/// upstream network), scored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    rows: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn from_rows(rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut dim: Option<usize> = None;
        for (utt_id, values) in rows {
            match dim {
                None => {
                    if values.is_empty() {
                        return Err(Error::InvalidInput(format!(
                            "embedding row {utt_id:?} has no columns"
                        )));
                    }
                    dim = Some(values.len());
                }
                Some(d) if d != values.len() => {
                    return Err(Error::DimensionMismatch(format!(
                        "embedding row {utt_id:?} has {} columns, expected {d}",
                        values.len()
                    )));
                }
                Some(_) => {}
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "embedding row {utt_id:?} has non-finite values"
                )));
            }
            if map.insert(utt_id.clone(), values).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate embedding row {utt_id:?}"
                )));
            }
        }
        let dim = dim.ok_or_else(|| Error::InvalidInput("embedding file is empty".into()))?;
        Ok(EmbeddingMatrix { dim, rows: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, utt_id: &str) -> Result<&[f64]> {
        self.rows
            .get(utt_id)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::MissingUtterance(utt_id.to_string()))
    }

    /// JSON-lines `{"utt_id": ..., "values": [...]}`.
    pub fn read_jsonl(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            utt_id: String,
            values: Vec<f64>,
        }
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Row = serde_json::from_str(&line).map_err(|e| Error::Manifest {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("bad embedding row: {e}"),
            })?;
            rows.push((row.utt_id, row.values));
        }
        EmbeddingMatrix::from_rows(rows)
    }

    /// Headerless numeric CSV plus a sidecar `<path>.ids` file carrying one
    /// utterance id per line, aligned with the CSV rows.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let ids_path = {
            let mut os = path.as_os_str().to_os_string();
            os.push(".ids");
            std::path::PathBuf::from(os)
        };
        let ids_text = fs::read_to_string(&ids_path).map_err(|e| Error::io(&ids_path, e))?;
        let ids: Vec<&str> = ids_text.lines().filter(|l| !l.trim().is_empty()).collect();

        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let values: Vec<f64> = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| Error::Manifest {
                        path: path.to_path_buf(),
                        line: i + 1,
                        msg: format!("bad number {cell:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            let utt_id = ids.get(i).ok_or_else(|| Error::Manifest {
                path: ids_path.clone(),
                line: i + 1,
                msg: "fewer ids than CSV rows".into(),
            })?;
            rows.push((utt_id.to_string(), values));
        }
        if ids.len() > rows.len() {
            return Err(Error::Manifest {
                path: ids_path,
                line: rows.len() + 1,
                msg: "more ids than CSV rows".into(),
            });
        }
        EmbeddingMatrix::from_rows(rows)
    }
}

/// Score each embedding column as-is against one attack on the training
/// pools: the column value is the score, best polarity. Returns one EER per
/// column.
pub fn score_embedding_columns(
    em: &EmbeddingMatrix,
    ds: &Dataset,
    pools: &PoolAssignment,
    attack: AttackId,
) -> Result<Vec<f64>> {
    let utts = protocol_utts(ds, pools, attack, Pool::TrainPool)?;
    let mut rows = Vec::with_capacity(utts.len());
    let mut labels = Vec::with_capacity(utts.len());
    for (utt_id, label) in &utts {
        rows.push(em.get(utt_id)?);
        labels.push(*label);
    }
    let mut eers = Vec::with_capacity(em.dim());
    for col in 0..em.dim() {
        let values: Vec<f64> = rows.iter().map(|r| r[col]).collect();
        let scores = raw_feature_scores(&values, &labels)?;
        eers.push(compute_eer(&scores, Polarity::BestOfBoth).eer_percent);
    }
    Ok(eers)
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    pub stddev: f64,
    pub count: usize,
}

fn summarize(values: &[f64]) -> SummaryStat {
    if values.is_empty() {
        return SummaryStat {
            mean: 0.0,
            stddev: 0.0,
            count: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    SummaryStat {
        mean,
        stddev: var.sqrt(),
        count: values.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackAggregate {
    pub attack: AttackId,
    /// Mean of the attack's diagonal (in-domain) cells.
    pub id_eer_percent: f64,
    /// Mean of the attack's off-diagonal (out-of-domain) cells.
    pub ood_eer_percent: f64,
}

/// Sub-matrix statistics by train/dev partition of the train and eval
/// attacks. `cross` pools both off-quadrant blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantStats {
    pub train_to_train: SummaryStat,
    pub dev_to_dev: SummaryStat,
    pub cross: SummaryStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub per_attack: Vec<AttackAggregate>,
    pub quadrants: QuadrantStats,
}

/// Collapse an OOD matrix to per-attack in-domain vs out-of-domain means and
/// the quadrant statistics. Quadrant statistics cover every cell of their
/// sub-matrix (the diagonal included — the quadrants describe the matrix
/// blocks, not just transfer cells); the per-attack OOD mean is strictly
/// off-diagonal.
pub fn aggregate_id_ood(ood: &OodMatrix) -> Aggregates {
    let mut per_attack = Vec::new();
    let mut attacks: Vec<AttackId> = ood.rows.iter().map(|r| r.train_attack).collect();
    attacks.sort_unstable();
    attacks.dedup();

    for &attack in &attacks {
        let mut diag = Vec::new();
        let mut off = Vec::new();
        for row in ood.rows.iter().filter(|r| r.train_attack == attack) {
            for (col, &cell) in ood.eval_attacks.iter().zip(&row.cells) {
                if *col == attack {
                    diag.push(cell);
                } else {
                    off.push(cell);
                }
            }
        }
        per_attack.push(AttackAggregate {
            attack,
            id_eer_percent: summarize(&diag).mean,
            ood_eer_percent: summarize(&off).mean,
        });
    }

    let mut tt = Vec::new();
    let mut dd = Vec::new();
    let mut cross = Vec::new();
    for row in &ood.rows {
        for (col, &cell) in ood.eval_attacks.iter().zip(&row.cells) {
            match (row.train_attack.partition(), col.partition()) {
                (Partition::Train, Partition::Train) => tt.push(cell),
                (Partition::Dev, Partition::Dev) => dd.push(cell),
                _ => cross.push(cell),
            }
        }
    }

    Aggregates {
        per_attack,
        quadrants: QuadrantStats {
            train_to_train: summarize(&tt),
            dev_to_dev: summarize(&dd),
            cross: summarize(&cross),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySplit {
    /// Mean EER over off-diagonal cells whose train and eval attacks share a
    /// system family.
    pub within_family: SummaryStat,
    /// Mean EER over off-diagonal cells crossing family lines.
    pub cross_family: SummaryStat,
}

/// Split the out-of-domain (off-diagonal) cells by whether the train and
/// eval attacks come from the same system family.
pub fn family_ood_split(ood: &OodMatrix) -> Result<FamilySplit> {
    let mut within = Vec::new();
    let mut cross = Vec::new();
    for row in &ood.rows {
        let train_family = attack_metadata(row.train_attack).family;
        for (col, &cell) in ood.eval_attacks.iter().zip(&row.cells) {
            if *col == row.train_attack {
                continue;
            }
            if attack_metadata(*col).family == train_family {
                within.push(cell);
            } else {
                cross.push(cell);
            }
        }
    }
    if within.is_empty() || cross.is_empty() {
        return Err(Error::InvalidInput(
            "family split needs both same-family and cross-family attack pairs".into(),
        ));
    }
    Ok(FamilySplit {
        within_family: summarize(&within),
        cross_family: summarize(&cross),
    })
}
