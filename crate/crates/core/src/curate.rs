//! Final dataset assembly: filtering, zero-reference rebalancing,
//! deduplication and dataset statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::jsonl::{self, JsonlError};
use crate::sample::CofSample;
use crate::trace_eval::{render_histogram, RefHistogram};

/// Dataset size reported for the released training set. These composition
/// figures are reference values only; nothing in this crate regenerates them.
///
/// ```
/// use cof_core::curate::{REPORTED_REAL_SAMPLES, REPORTED_SYNTH_SAMPLES, REPORTED_TOTAL_SAMPLES};
/// assert_eq!(REPORTED_TOTAL_SAMPLES, 164_186);
/// assert_eq!(REPORTED_REAL_SAMPLES, 103_683);
/// assert_eq!(REPORTED_SYNTH_SAMPLES, 60_503);
/// assert_eq!(REPORTED_REAL_SAMPLES + REPORTED_SYNTH_SAMPLES, REPORTED_TOTAL_SAMPLES);
/// ```
pub const REPORTED_TOTAL_SAMPLES: usize = 164_186;
/// Real-video share of [`REPORTED_TOTAL_SAMPLES`].
pub const REPORTED_REAL_SAMPLES: usize = 103_683;
/// Synthetic-video share of [`REPORTED_TOTAL_SAMPLES`].
pub const REPORTED_SYNTH_SAMPLES: usize = 60_503;

pub const DEFAULT_TARGET_ZERO_REF_FRACTION: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    QuestionReference,
    EmptyQuestion,
    EmptyReasoning,
    EmptyAnswer,
    RefMismatch,
    OutOfRange,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::QuestionReference => "question_reference",
            RejectReason::EmptyQuestion => "empty_question",
            RejectReason::EmptyReasoning => "empty_reasoning",
            RejectReason::EmptyAnswer => "empty_answer",
            RejectReason::RefMismatch => "ref_mismatch",
            RejectReason::OutOfRange => "out_of_range",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

/// Checks a sample against the record invariants for a video of `k` frames.
pub fn validate(sample: &CofSample, k: usize) -> Verdict {
    use RejectReason::*;
    let reason = if sample.question_has_frame_ref() {
        QuestionReference
    } else if sample.question.trim().is_empty() {
        EmptyQuestion
    } else if sample.reasoning.is_empty() || sample.reasoning.iter().all(|s| s.trim().is_empty()) {
        EmptyReasoning
    } else if sample.answer.trim().is_empty() {
        EmptyAnswer
    } else if sample.frame_refs != sample.derived_refs() {
        RefMismatch
    } else if sample.frame_refs.iter().any(|&f| f < 1 || f as usize > k) {
        OutOfRange
    } else {
        return Verdict::Accept;
    };
    Verdict::Reject(reason)
}

/// Keeps every referencing sample and a seeded uniform subset of the
/// zero-reference ones, so that the zero-reference share is at most
/// `min(current, target)`. With `r` referencing samples the retained
/// zero-reference count is `floor(target * r / (1 - target))`. Input order is
/// preserved.
pub fn rebalance(samples: &[CofSample], target_zero_ref_fraction: f64, seed: u64) -> Vec<CofSample> {
    let target = target_zero_ref_fraction.clamp(0.0, 1.0);
    let zero: Vec<bool> = samples.par_iter().map(|s| s.frame_refs.is_empty()).collect();
    let zero_idx: Vec<usize> = zero
        .iter()
        .enumerate()
        .filter(|(_, &z)| z)
        .map(|(i, _)| i)
        .collect();
    let n_ref = samples.len() - zero_idx.len();

    let allowed = if target >= 1.0 {
        zero_idx.len()
    } else {
        ((target * n_ref as f64 / (1.0 - target)) + 1e-9).floor() as usize
    };
    if allowed >= zero_idx.len() {
        return samples.to_vec();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; samples.len()];
    for &i in &zero_idx {
        keep[i] = false;
    }
    for pick in sample_indices(&mut rng, zero_idx.len(), allowed) {
        keep[zero_idx[pick]] = true;
    }
    samples
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(s, _)| s.clone())
        .collect()
}

/// Drops samples repeating an earlier `(video_ref, question)` pair.
pub fn dedup(samples: Vec<CofSample>) -> Vec<CofSample> {
    let mut seen = HashSet::new();
    samples
        .into_iter()
        .filter(|s| seen.insert((s.video_ref.clone(), s.question.clone())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurateError {
    #[error("dataset is empty")]
    EmptyDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub total: usize,
    pub by_source: BTreeMap<String, usize>,
    pub by_category: BTreeMap<String, usize>,
    pub zero_ref_fraction: f64,
    /// Samples per distinct-reference count (bins 0..=10, "11+").
    pub histogram: RefHistogram,
}

pub fn manifest(samples: &[CofSample]) -> Result<DatasetManifest, CurateError> {
    if samples.is_empty() {
        return Err(CurateError::EmptyDataset);
    }
    let mut by_source = BTreeMap::new();
    let mut by_category = BTreeMap::new();
    let mut histogram = RefHistogram::default();
    for s in samples {
        *by_source.entry(s.source.to_string()).or_insert(0) += 1;
        *by_category.entry(s.category.to_string()).or_insert(0) += 1;
        histogram.add(s.frame_refs.len());
    }
    Ok(DatasetManifest {
        total: samples.len(),
        by_source,
        by_category,
        zero_ref_fraction: histogram.count(0) as f64 / samples.len() as f64,
        histogram,
    })
}

impl DatasetManifest {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let rows = self
            .by_source
            .iter()
            .map(|(k, v)| (format!("source/{k}"), *v))
            .chain(self.by_category.iter().map(|(k, v)| (format!("category/{k}"), *v)));
        let rows: Vec<(String, usize)> = rows.collect();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(5).max(5);
        for (k, v) in &rows {
            let _ = writeln!(out, "{k:<width$}  {v:>8}");
        }
        let _ = writeln!(out, "{:<width$}  {:>8}", "total", self.total);
        let _ = writeln!(out, "{:<width$}  {:>8.4}", "zero_ref_fraction", self.zero_ref_fraction);
        out.push('\n');
        out.push_str(&render_histogram(&self.histogram));
        out
    }
}

pub fn write_dataset(samples: &[CofSample], path: impl AsRef<Path>) -> Result<(), JsonlError> {
    jsonl::write(path, samples)
}

/// Reads a dataset file; unknown fields are an error citing the line.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<CofSample>, JsonlError> {
    jsonl::read(path)
}

/// A sample removed by [`curate`], with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejected {
    pub sample_id: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curated {
    pub samples: Vec<CofSample>,
    pub rejected: Vec<Rejected>,
    pub duplicates: usize,
    pub rebalanced_away: usize,
}

/// validate → dedup → rebalance, in that order.
pub fn curate(samples: Vec<CofSample>, k: usize, target_zero_ref_fraction: f64, seed: u64) -> Curated {
    let verdicts: Vec<Verdict> = samples.par_iter().map(|s| validate(s, k)).collect();
    let mut accepted = Vec::with_capacity(samples.len());
    let mut rejected = Vec::new();
    for (s, v) in samples.into_iter().zip(verdicts) {
        match v {
            Verdict::Accept => accepted.push(s),
            Verdict::Reject(reason) => rejected.push(Rejected {
                sample_id: s.sample_id,
                reason,
            }),
        }
    }
    let before = accepted.len();
    let unique = dedup(accepted);
    let duplicates = before - unique.len();
    let kept = rebalance(&unique, target_zero_ref_fraction, seed);
    Curated {
        rebalanced_away: unique.len() - kept.len(),
        samples: kept,
        rejected,
        duplicates,
    }
}
