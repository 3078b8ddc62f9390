//! Frame-reference parsing and prediction scoring.
//!
//! [`extract_frame_refs`] is the single definition of what counts as a frame
//! reference; sample generation, curation and evaluation all go through it.

mod answer;
mod metrics;
mod refs;

pub use answer::{extract_answer, Answer, NoAnswerFound};
pub use metrics::{
    mra, render_histogram, score, trace_histogram, KindScore, MetricReport, MraError, ScoreError,
    SplitScore,
};
pub use refs::{contains_frame_ref, extract_frame_refs, find_frame_refs, FrameRefMatch, RefHistogram};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceOption {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskKind {
    MultipleChoice { options: Vec<ChoiceOption> },
    BinaryYesNo,
    Numeric,
}

/// Gold answer: an option label, "yes"/"no", or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gold {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalTask {
    pub task_id: String,
    pub kind: TaskKind,
    pub gold: Gold,
    pub split: String,
}

impl EvalTask {
    pub fn validate(&self) -> Result<(), String> {
        match (&self.kind, &self.gold) {
            (TaskKind::MultipleChoice { options }, Gold::Text(label)) => {
                if options.len() < 2 {
                    return Err("multiple choice needs at least two options".into());
                }
                for (i, opt) in options.iter().enumerate() {
                    let expected = char::from(b'A' + (i as u8).min(25));
                    if i >= 26 || opt.label != expected.to_string() {
                        return Err(format!("option {i} must be labeled {expected}"));
                    }
                }
                if !options.iter().any(|o| &o.label == label) {
                    return Err(format!("gold label {label:?} is not an option"));
                }
                Ok(())
            }
            (TaskKind::BinaryYesNo, Gold::Text(g))
                if g.eq_ignore_ascii_case("yes") || g.eq_ignore_ascii_case("no") =>
            {
                Ok(())
            }
            (TaskKind::Numeric, Gold::Number(g)) if g.is_finite() => Ok(()),
            _ => Err(format!("gold {:?} does not fit task kind {}", self.gold, self.kind.name())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub task_id: String,
    pub raw_text: String,
}
