//! Interpretable audio anti-spoofing built on scalar acoustic features.
//!
//! This crate extracts a small registry of hand-designed prosodic and
//! spectral descriptors (pitch, loudness, spectral flux, voicing-segment
//! statistics) from speech clips, then uses single features — optionally
//! through tiny logistic models — to separate bonafide speech from
//! synthetic attacks. The point is not raw benchmark strength but
//! legibility: every score traces back to a named scalar with physical
//! units, so a detection can be explained ("the pauses are too short") and
//! probed for how it fails on unseen synthesis systems.
//!
//! The pipeline is organized as:
//!
//! - [`corpus`]: manifests, attack identifiers, and train/eval pool splits.
//! - [`audio`]: WAV I/O, resampling, and framing.
//! - [`lld`]: low-level descriptor tracks (loudness, spectral flux, F0 and
//!   the voicing decision).
//! - [`features`]: the per-clip feature registry and the functionals that
//!   collapse tracks to scalars.
//! - [`classify`]: standardized logistic regression over selected features.
//! - [`eval`]: EER computation, the in-domain and out-of-domain protocols,
//!   and their aggregate statistics.
//! - [`synth`]: a deterministic test-signal corpus generator with known
//!   ground truth.
//! - [`pipeline`]: batch extraction and the on-disk feature table format.
//! - [`report`]: SVG/HTML/CSV/JSON artifacts.
//!
//! Everything is deterministic: fixed seeds reproduce corpora, features,
//! models, and reports byte for byte.

pub mod audio;
pub mod classify;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod lld;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{Error, ErrorCategory, Result};
pub use features::{FeatureVector, N_FEATURES, REGISTRY_VERSION};
