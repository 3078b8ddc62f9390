use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::answer::{extract_answer, Answer};
use super::refs::{extract_frame_refs, RefHistogram};
use super::{EvalTask, Gold, Prediction, TaskKind};

/// Tolerances `1 - θ` for θ ∈ {0.50, 0.55, …, 0.95}, in percent.
const MRA_TOLERANCE_PCT: [u32; 10] = [50, 45, 40, 35, 30, 25, 20, 15, 10, 5];

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MraError {
    #[error("ground truth is zero")]
    ZeroGold,
    #[error("non-finite input")]
    NonFinite,
}

/// Mean relative accuracy: the fraction of the ten confidence thresholds at
/// which the relative error `|pred - gold| / |gold|` is strictly below
/// `1 - θ`.
pub fn mra(pred: f64, gold: f64) -> Result<f64, MraError> {
    if !pred.is_finite() || !gold.is_finite() {
        return Err(MraError::NonFinite);
    }
    if gold == 0.0 {
        return Err(MraError::ZeroGold);
    }
    let rel = (pred - gold).abs() / gold.abs();
    let hits = MRA_TOLERANCE_PCT
        .iter()
        .filter(|&&pct| rel < pct as f64 / 100.0)
        .count();
    Ok(hits as f64 / 10.0)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("prediction references unknown task {0:?}")]
    UnknownTask(String),
    #[error("task {0:?} has more than one prediction")]
    DuplicatePrediction(String),
    #[error("task {task_id:?}: {reason}")]
    InvalidTask { task_id: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub n_tasks: usize,
    pub score: f64,
    pub no_answer: usize,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindScore {
    pub n_tasks: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub splits: BTreeMap<String, SplitScore>,
    /// Unweighted mean of the split scores.
    pub overall: f64,
    pub per_kind: BTreeMap<String, KindScore>,
    pub n_tasks: usize,
    pub n_predictions: usize,
    pub no_answer: usize,
    pub missing_predictions: usize,
    pub histogram: RefHistogram,
}

enum Outcome {
    Scored(f64),
    NoAnswer,
    Missing,
}

impl Outcome {
    fn value(&self) -> f64 {
        match self {
            Outcome::Scored(v) => *v,
            _ => 0.0,
        }
    }
}

fn score_one(task: &EvalTask, pred: Option<&Prediction>) -> Outcome {
    let Some(pred) = pred else {
        return Outcome::Missing;
    };
    let Ok(answer) = extract_answer(&pred.raw_text, &task.kind) else {
        return Outcome::NoAnswer;
    };
    let value = match (answer, &task.gold) {
        (Answer::Choice(c), Gold::Text(g)) => (g.chars().eq(std::iter::once(c))) as u8 as f64,
        (Answer::Binary(b), Gold::Text(g)) => {
            (g.eq_ignore_ascii_case(if b { "yes" } else { "no" })) as u8 as f64
        }
        (Answer::Number(x), Gold::Number(g)) => mra(x, *g).unwrap_or(0.0),
        _ => 0.0,
    };
    Outcome::Scored(value)
}

/// Scores predictions against tasks. Choice and binary tasks score accuracy,
/// numeric tasks score [`mra`]. Tasks without a prediction or without an
/// extractable answer score 0 and are tallied.
pub fn score(tasks: &[EvalTask], predictions: &[Prediction]) -> Result<MetricReport, ScoreError> {
    for t in tasks {
        t.validate().map_err(|reason| ScoreError::InvalidTask {
            task_id: t.task_id.clone(),
            reason,
        })?;
    }
    let known: HashMap<&str, usize> = tasks
        .iter()
        .enumerate()
        .map(|(i, t)| (t.task_id.as_str(), i))
        .collect();
    let mut by_task: HashMap<&str, &Prediction> = HashMap::new();
    for p in predictions {
        if !known.contains_key(p.task_id.as_str()) {
            return Err(ScoreError::UnknownTask(p.task_id.clone()));
        }
        if by_task.insert(p.task_id.as_str(), p).is_some() {
            return Err(ScoreError::DuplicatePrediction(p.task_id.clone()));
        }
    }

    let outcomes: Vec<Outcome> = tasks
        .par_iter()
        .map(|t| score_one(t, by_task.get(t.task_id.as_str()).copied()))
        .collect();

    let mut splits: BTreeMap<String, (SplitScore, f64)> = BTreeMap::new();
    let mut kinds: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    let mut no_answer = 0;
    let mut missing = 0;
    for (task, outcome) in tasks.iter().zip(&outcomes) {
        let entry = splits.entry(task.split.clone()).or_insert((
            SplitScore {
                n_tasks: 0,
                score: 0.0,
                no_answer: 0,
                missing: 0,
            },
            0.0,
        ));
        entry.0.n_tasks += 1;
        entry.1 += outcome.value();
        match outcome {
            Outcome::NoAnswer => {
                entry.0.no_answer += 1;
                no_answer += 1;
            }
            Outcome::Missing => {
                entry.0.missing += 1;
                missing += 1;
            }
            Outcome::Scored(_) => {}
        }
        let k = kinds.entry(task.kind.name().to_string()).or_insert((0, 0.0));
        k.0 += 1;
        k.1 += outcome.value();
    }

    let splits: BTreeMap<String, SplitScore> = splits
        .into_iter()
        .map(|(name, (mut s, sum))| {
            s.score = sum / s.n_tasks as f64;
            (name, s)
        })
        .collect();
    let overall = if splits.is_empty() {
        0.0
    } else {
        splits.values().map(|s| s.score).sum::<f64>() / splits.len() as f64
    };
    let per_kind = kinds
        .into_iter()
        .map(|(k, (n, sum))| {
            (
                k,
                KindScore {
                    n_tasks: n,
                    score: sum / n as f64,
                },
            )
        })
        .collect();

    Ok(MetricReport {
        splits,
        overall,
        per_kind,
        n_tasks: tasks.len(),
        n_predictions: predictions.len(),
        no_answer,
        missing_predictions: missing,
        histogram: trace_histogram(predictions),
    })
}

/// Distinct-frame-reference histogram over prediction texts.
pub fn trace_histogram(predictions: &[Prediction]) -> RefHistogram {
    let counts: Vec<usize> = predictions
        .par_iter()
        .map(|p| extract_frame_refs(&p.raw_text).len())
        .collect();
    let mut h = RefHistogram::default();
    for c in counts {
        h.add(c);
    }
    h
}

impl MetricReport {
    /// Aligned plain-text table of split scores followed by the histogram.
    pub fn render_table(&self) -> String {
        let width = self
            .splits
            .keys()
            .map(String::len)
            .chain(["overall".len()])
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>7}  {:>8}  {:>9}", "split", "tasks", "score", "no_answer");
        for (name, s) in &self.splits {
            let _ = writeln!(
                out,
                "{:<width$}  {:>7}  {:>8.4}  {:>9}",
                name, s.n_tasks, s.score, s.no_answer
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>7}  {:>8.4}  {:>9}",
            "overall", self.n_tasks, self.overall, self.no_answer
        );
        out.push('\n');
        out.push_str(&render_histogram(&self.histogram));
        out
    }
}

pub fn render_histogram(h: &RefHistogram) -> String {
    let mut out = String::from("n_refs  count\n");
    for (label, count) in h.iter() {
        let _ = writeln!(out, "{label:>6}  {count:>5}");
    }
    out
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::MultipleChoice { .. } => "multiple_choice",
            TaskKind::BinaryYesNo => "binary_yes_no",
            TaskKind::Numeric => "numeric",
        }
    }
}
