//! Batch front-end for the spoofprint pipeline.
//!
//! Subcommands mirror the stages of the analysis: pool splitting, feature
//! extraction, per-feature ranking, the in-domain and out-of-domain
//! protocols, embedding-column scoring, full-feature model training, test
//! corpus synthesis, and distribution plots. Every run is deterministic:
//! rerunning a subcommand with the same inputs rewrites its outputs byte for
//! byte.
//!
//! Exit codes: 0 success, 1 usage, 2 data/validation, 3 I/O. On failure the
//! last stderr line is a JSON object `{"error": ..., "category": ...}`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spoofprint::classify::{raw_feature_scores, train_model, ScoreSet};
use spoofprint::corpus::{parse_manifest, split_pools, AttackId, Label, Pool, PoolAssignment};
use spoofprint::error::{Error, ErrorCategory, Result};
use spoofprint::eval::{
    aggregate_id_ood, compute_eer, family_ood_split, rank_features, run_id_protocol,
    run_ood_protocol, score_embedding_columns, EmbeddingMatrix, Polarity,
};
use spoofprint::features::registry;
use spoofprint::pipeline::{extract_corpus, FeatureTable};
use spoofprint::report::{
    distribution_svg, emit_heatmap_html, emit_tables, id_table_csv, ood_csv, DistSeries,
};
use spoofprint::synth::{gen_corpus, CorpusSpec};
use spoofprint::PipelineConfig;

#[derive(Parser)]
#[command(name = "spoofprint", version, about = "Interpretable anti-spoofing feature analysis")]
struct Cli {
    /// JSON file overriding frame, voicing, and trainer defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a manifest into train/eval pools.
    Pools {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        ratio: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the feature table for every utterance in a manifest.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for decoding/extraction (results are identical at
        /// any setting).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Rank implemented features by raw train-pool EER against one attack.
    Rank {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        pools: PathBuf,
        #[arg(long)]
        attack: String,
        #[arg(long, default_value_t = 2)]
        top: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// In-domain protocol: top-k single-feature models per attack.
    EvalId {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        pools: PathBuf,
        #[arg(long, default_value_t = 2)]
        top: usize,
        /// CSV output; a .json twin with full precision lands next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Out-of-domain matrix: every trained model against every attack.
    EvalOod {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        pools: PathBuf,
        #[arg(long, default_value_t = 2)]
        top: usize,
        /// CSV output; .json twin plus aggregate tables land next to it.
        #[arg(long)]
        out: PathBuf,
        /// Color-coded heatmap page.
        #[arg(long)]
        html: Option<PathBuf>,
    },
    /// Score every embedding column as a standalone detector, per attack.
    EmbedEer {
        /// JSON-lines ({"utt_id", "values"}) or headerless CSV with a
        /// sidecar `<file>.ids` listing one utt_id per row.
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        pools: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overlaid per-attack EER distribution plot.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Train one logistic model on all implemented features for one attack.
    TrainAll {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        pools: PathBuf,
        #[arg(long)]
        attack: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with known ground truth.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distribution plot of one feature, bona fide vs one attack.
    PlotDist {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        attack: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{}", e.render());
                return ExitCode::SUCCESS;
            }
            let msg = e.render().to_string();
            eprint!("{msg}");
            eprintln!("{}", serde_json::json!({ "error": msg.trim(), "category": "usage" }));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (category, code) = match e.category() {
                ErrorCategory::Io => ("io", 3),
                ErrorCategory::Data => ("data", 2),
            };
            eprintln!("{}", serde_json::json!({ "error": e.to_string(), "category": category }));
            ExitCode::from(code)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Json {
                path: p.clone(),
                source: e,
            })
        }
    }
}

fn parse_attack(s: &str) -> Result<AttackId> {
    s.parse()
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn write_pretty_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

/// Sibling path with a different extension: `ood.csv` -> `ood.json`.
fn with_ext(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => EmbeddingMatrix::read_csv(path),
        _ => EmbeddingMatrix::read_jsonl(path),
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Pools {
            manifest,
            ratio,
            seed,
            out,
        } => {
            let ds = parse_manifest(&manifest)?;
            let pools = split_pools(&ds, ratio, seed)?;
            pools.write(&out)?;
            println!(
                "pools: {} train / {} eval -> {}",
                pools.train_ids().count(),
                pools.eval_ids().count(),
                out.display()
            );
            Ok(())
        }
        Command::Extract { manifest, out, jobs } => {
            let ds = parse_manifest(&manifest)?;
            let table = extract_corpus(&ds, &cfg, jobs)?;
            table.write_jsonl(&out)?;
            println!("extracted {} utterances -> {}", ds.records.len(), out.display());
            Ok(())
        }
        Command::Rank {
            manifest,
            features,
            pools,
            attack,
            top,
            out,
        } => {
            let ds = parse_manifest(&manifest)?;
            let table = FeatureTable::read_jsonl(&features)?;
            let pools = PoolAssignment::read(&pools)?;
            let attack = parse_attack(&attack)?;
            let ranked = rank_features(&ds, &table, &pools, attack, top)?;
            write_pretty_json(&out, &ranked)?;
            for r in &ranked {
                println!("F{:<3} {:<40} train EER {:5.1}%", r.index, r.name, r.train_eer_percent);
            }
            Ok(())
        }
        Command::EvalId {
            manifest,
            features,
            pools,
            top,
            out,
        } => {
            let ds = parse_manifest(&manifest)?;
            let table = FeatureTable::read_jsonl(&features)?;
            let pools = PoolAssignment::read(&pools)?;
            let id = run_id_protocol(&ds, &table, &pools, &ds.attacks_present(), top, &cfg)?;
            write_text(&out, &id_table_csv(&id))?;
            write_pretty_json(&with_ext(&out, "json"), &id)?;
            println!("in-domain: {} rows -> {}", id.rows.len(), out.display());
            Ok(())
        }
        Command::EvalOod {
            manifest,
            features,
            pools,
            top,
            out,
            html,
        } => {
            let ds = parse_manifest(&manifest)?;
            let table = FeatureTable::read_jsonl(&features)?;
            let pools = PoolAssignment::read(&pools)?;
            let id = run_id_protocol(&ds, &table, &pools, &ds.attacks_present(), top, &cfg)?;
            let ood = run_ood_protocol(&ds, &table, &pools, &id)?;
            write_text(&out, &ood_csv(&ood))?;
            write_pretty_json(&with_ext(&out, "json"), &ood)?;

            let agg = aggregate_id_ood(&ood);
            let dir = out.parent().unwrap_or_else(|| Path::new("."));
            emit_tables(&id, &agg, dir)?;
            if let Ok(split) = family_ood_split(&ood) {
                write_pretty_json(&dir.join("family.json"), &split)?;
            }
            if let Some(html) = html {
                emit_heatmap_html(&ood, &html)?;
            }
            println!(
                "out-of-domain: {} x {} matrix -> {}",
                ood.rows.len(),
                ood.eval_attacks.len(),
                out.display()
            );
            Ok(())
        }
        Command::EmbedEer {
            embeddings,
            manifest,
            pools,
            out,
            svg,
        } => {
            let ds = parse_manifest(&manifest)?;
            let em = load_embeddings(&embeddings)?;
            let pools = PoolAssignment::read(&pools)?;
            let attacks = ds.attacks_present();
            if attacks.is_empty() {
                return Err(Error::InvalidInput("manifest has no attacks".into()));
            }
            let mut per_attack: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for &attack in &attacks {
                let eers = score_embedding_columns(&em, &ds, &pools, attack)?;
                per_attack.insert(attack.to_string(), eers);
            }
            write_pretty_json(
                &out,
                &serde_json::json!({ "dim": em.dim(), "per_attack": per_attack }),
            )?;
            if let Some(svg_path) = svg {
                let series: Vec<DistSeries> = per_attack
                    .iter()
                    .map(|(name, values)| DistSeries {
                        name: name.clone(),
                        values: values.clone(),
                    })
                    .collect();
                let svg_text = distribution_svg(
                    &series,
                    30,
                    None,
                    "per-column EER (%)",
                    "Embedding column EER distribution",
                )?;
                write_text(&svg_path, &svg_text)?;
            }
            println!(
                "embedding: {} columns scored for {} attacks -> {}",
                em.dim(),
                attacks.len(),
                out.display()
            );
            Ok(())
        }
        Command::TrainAll {
            manifest,
            features,
            pools,
            attack,
            out,
        } => {
            let ds = parse_manifest(&manifest)?;
            let table = FeatureTable::read_jsonl(&features)?;
            let pools = PoolAssignment::read(&pools)?;
            let attack = parse_attack(&attack)?;
            let indices = registry().implemented_indices();

            let gather = |pool: Pool| -> Result<(Vec<Vec<f64>>, Vec<Label>)> {
                let mut rows = Vec::new();
                let mut labels = Vec::new();
                for rec in &ds.records {
                    let in_scope = match rec.attack {
                        None => true,
                        Some(a) => a == attack,
                    };
                    if !in_scope || pools.pool_of(&rec.utt_id) != Some(pool) {
                        continue;
                    }
                    let fv = table.get(&rec.utt_id)?;
                    let mut row = Vec::with_capacity(indices.len());
                    for &i in &indices {
                        row.push(fv.value(i)?);
                    }
                    rows.push(row);
                    labels.push(rec.label);
                }
                Ok((rows, labels))
            };

            let (train_rows, train_labels) = gather(Pool::TrainPool)?;
            let mut outcome = train_model(
                &train_rows,
                &train_labels,
                &indices,
                table.registry_version(),
                &cfg.trainer,
            )?;
            outcome.model.trained_on = Some(attack.to_string());
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            write_pretty_json(&out, &outcome.model)?;

            let eer_on = |rows: &[Vec<f64>], labels: &[Label]| -> Result<f64> {
                let mut scored = Vec::with_capacity(rows.len());
                for (row, &label) in rows.iter().zip(labels) {
                    let kept: Vec<f64> = outcome
                        .model
                        .feature_indices
                        .iter()
                        .map(|&i| rows_value(row, &indices, i))
                        .collect();
                    scored.push((outcome.model.score(&kept)?, label));
                }
                Ok(compute_eer(&ScoreSet::new(scored)?, Polarity::FixedHigherIsSpoof).eer_percent)
            };
            let train_eer = eer_on(&train_rows, &train_labels)?;
            let (eval_rows, eval_labels) = gather(Pool::EvalPool)?;
            let eval_eer = eer_on(&eval_rows, &eval_labels)?;
            println!(
                "trained {}-feature model on {attack}: train EER {train_eer:.1}%, eval EER {eval_eer:.1}% -> {}",
                outcome.model.dim(),
                out.display()
            );
            Ok(())
        }
        Command::Synth { spec, out } => {
            let cs = CorpusSpec::read(&spec)?;
            let manifest = gen_corpus(&cs.bona, &cs.attacks, &out)?;
            println!("synthesized corpus -> {}", manifest.display());
            Ok(())
        }
        Command::PlotDist {
            manifest,
            features,
            index,
            attack,
            out,
        } => {
            let ds = parse_manifest(&manifest)?;
            let table = FeatureTable::read_jsonl(&features)?;
            let attack = parse_attack(&attack)?;
            let def = registry().def(index)?;

            let mut values = Vec::new();
            let mut labels = Vec::new();
            let mut bona = Vec::new();
            let mut spoof = Vec::new();
            for rec in &ds.records {
                let keep = match rec.attack {
                    None => true,
                    Some(a) => a == attack,
                };
                if !keep {
                    continue;
                }
                let v = table.get(&rec.utt_id)?.value(index)?;
                values.push(v);
                labels.push(rec.label);
                match rec.label {
                    Label::Bonafide => bona.push(v),
                    Label::Spoof => spoof.push(v),
                }
            }
            let scores = raw_feature_scores(&values, &labels)?;
            let eer = compute_eer(&scores, Polarity::BestOfBoth);

            let series = [
                DistSeries {
                    name: "bonafide".into(),
                    values: bona,
                },
                DistSeries {
                    name: format!("{attack} spoof"),
                    values: spoof,
                },
            ];
            let svg = distribution_svg(
                &series,
                30,
                Some(eer.threshold),
                &def.name,
                &format!("F{index} {} : bona fide vs {attack} (EER {:.1}%)", def.short(), eer.eer_percent),
            )?;
            write_text(&out, &svg)?;
            println!(
                "F{index} vs {attack}: EER {:.1}% at {:.4} -> {}",
                eer.eer_percent,
                eer.threshold,
                out.display()
            );
            Ok(())
        }
    }
}

/// Pull the value for registry slot `slot` out of a row laid out per
/// `indices`.
fn rows_value(row: &[f64], indices: &[usize], slot: usize) -> f64 {
    let pos = indices
        .iter()
        .position(|&i| i == slot)
        .expect("model indices come from the same registry selection");
    row[pos]
}
