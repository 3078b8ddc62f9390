//! Splits LLM completions into (question, reasoning steps, answer) triplets.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

const QUESTION: &str = "**Question**:";
const REASONING: &str = "**Reasoning**:";
const ANSWER: &str = "**Answer**:";

static ENUMERATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:[0-9]+[.)]|[-*•])\s*").expect("valid regex"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub question: String,
    pub reasoning: Vec<String>,
    pub answer: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Question,
    Reasoning,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MalformedCompletion {
    #[error("no markers found")]
    NoMarkers,
    #[error("triplet {index}: missing {missing:?} marker")]
    MissingMarker { index: usize, missing: Field },
    #[error("triplet {index}: {found:?} marker out of order")]
    OutOfOrder { index: usize, found: Field },
    #[error("triplet {index}: empty {field:?}")]
    EmptyField { index: usize, field: Field },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedCompletion {
    pub triplets: Vec<Triplet>,
    pub rejects: Vec<MalformedCompletion>,
}

#[derive(Default)]
struct Partial<'a> {
    question: Option<&'a str>,
    reasoning: Option<&'a str>,
    broken: Option<MalformedCompletion>,
}

/// Parses every triplet in `text`. Never fails: malformed triplets become
/// rejects and the remaining triplets are still returned.
pub fn parse_generation(text: &str) -> ParsedCompletion {
    let mut markers: Vec<(usize, Field, usize)> = Vec::new();
    for (marker, field) in [(QUESTION, Field::Question), (REASONING, Field::Reasoning), (ANSWER, Field::Answer)] {
        markers.extend(text.match_indices(marker).map(|(pos, m)| (pos, field, pos + m.len())));
    }
    markers.sort_by_key(|m| m.0);

    let mut out = ParsedCompletion::default();
    if markers.is_empty() {
        out.rejects.push(MalformedCompletion::NoMarkers);
        return out;
    }

    let mut index = 0;
    let mut current: Option<Partial<'_>> = None;
    for (i, &(_, field, body_start)) in markers.iter().enumerate() {
        let body_end = markers.get(i + 1).map_or(text.len(), |m| m.0);
        let body = &text[body_start..body_end];
        match field {
            Field::Question => {
                if let Some(p) = current.take() {
                    out.rejects.push(p.broken.unwrap_or(MalformedCompletion::MissingMarker {
                        index,
                        missing: if p.reasoning.is_some() { Field::Answer } else { Field::Reasoning },
                    }));
                    index += 1;
                }
                current = Some(Partial {
                    question: Some(body),
                    ..Partial::default()
                });
            }
            Field::Reasoning => {
                let p = current.get_or_insert_with(Partial::default);
                if p.broken.is_some() {
                    continue;
                }
                if p.question.is_none() {
                    p.broken = Some(MalformedCompletion::MissingMarker {
                        index,
                        missing: Field::Question,
                    });
                } else if p.reasoning.is_some() {
                    p.broken = Some(MalformedCompletion::OutOfOrder {
                        index,
                        found: Field::Reasoning,
                    });
                } else {
                    p.reasoning = Some(body);
                }
            }
            Field::Answer => {
                let p = current.take().unwrap_or_default();
                let result = match (&p.broken, p.question, p.reasoning) {
                    (Some(err), _, _) => Err(err.clone()),
                    (None, None, _) => Err(MalformedCompletion::MissingMarker {
                        index,
                        missing: Field::Question,
                    }),
                    (None, Some(_), None) => Err(MalformedCompletion::MissingMarker {
                        index,
                        missing: Field::Reasoning,
                    }),
                    (None, Some(q), Some(r)) => build_triplet(index, q, r, body),
                };
                match result {
                    Ok(t) => out.triplets.push(t),
                    Err(e) => out.rejects.push(e),
                }
                index += 1;
            }
        }
    }
    if let Some(p) = current {
        out.rejects.push(p.broken.unwrap_or(MalformedCompletion::MissingMarker {
            index,
            missing: if p.question.is_none() {
                Field::Question
            } else if p.reasoning.is_none() {
                Field::Reasoning
            } else {
                Field::Answer
            },
        }));
    }
    out
}

fn build_triplet(index: usize, question: &str, reasoning: &str, answer: &str) -> Result<Triplet, MalformedCompletion> {
    let empty = |field| MalformedCompletion::EmptyField { index, field };
    let question = question.trim();
    let answer = answer.trim();
    let steps = split_steps(reasoning);
    if question.is_empty() {
        return Err(empty(Field::Question));
    }
    if steps.is_empty() {
        return Err(empty(Field::Reasoning));
    }
    if answer.is_empty() {
        return Err(empty(Field::Answer));
    }
    Ok(Triplet {
        question: question.to_string(),
        reasoning: steps,
        answer: answer.to_string(),
    })
}

/// One step per non-empty line, with list markers ("1.", "2)", "-") removed.
pub fn split_steps(reasoning: &str) -> Vec<String> {
    reasoning
        .lines()
        .map(|line| ENUMERATION.replace(line.trim(), "").trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}
