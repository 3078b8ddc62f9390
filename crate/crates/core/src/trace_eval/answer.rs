//! Answer extraction from free-form model output.
//!
//! Heuristics: the last mention wins, and numbers that belong to a frame
//! reference ("Frame 7") are never read as numeric answers.

use std::sync::LazyLock;

use regex::Regex;

use super::refs::find_frame_refs;
use super::TaskKind;

static ANSWER_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\banswer\b").expect("valid regex"));
static LETTER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b([A-Z])\b").expect("valid regex"));
static YES_NO: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(yes|no)\b").expect("valid regex"));
static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b[0-9]+(?:\.[0-9]+)?\b").expect("valid regex"));

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Answer {
    Choice(char),
    Binary(bool),
    Number(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no answer found in model output")]
pub struct NoAnswerFound;

pub fn extract_answer(raw_text: &str, kind: &TaskKind) -> Result<Answer, NoAnswerFound> {
    match kind {
        TaskKind::MultipleChoice { options } => {
            let labels: Vec<char> = options
                .iter()
                .filter_map(|o| single_char(&o.label))
                .collect();
            extract_choice(raw_text, &labels).map(Answer::Choice)
        }
        TaskKind::BinaryYesNo => YES_NO
            .captures_iter(raw_text)
            .last()
            .map(|c| Answer::Binary(c[1].eq_ignore_ascii_case("yes")))
            .ok_or(NoAnswerFound),
        TaskKind::Numeric => extract_number(raw_text).map(Answer::Number),
    }
}

fn single_char(s: &str) -> Option<char> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

fn extract_choice(text: &str, labels: &[char]) -> Result<char, NoAnswerFound> {
    let valid = |c: &regex::Captures<'_>| {
        c[1].chars()
            .next()
            .filter(|ch| labels.contains(ch))
    };
    for line in text.lines().rev() {
        let Some(word) = ANSWER_WORD.find_iter(line).last() else {
            continue;
        };
        if let Some(ch) = LETTER
            .captures_iter(&line[word.end()..])
            .find_map(|c| valid(&c))
        {
            return Ok(ch);
        }
    }
    LETTER
        .captures_iter(text)
        .filter_map(|c| valid(&c))
        .last()
        .ok_or(NoAnswerFound)
}

fn extract_number(text: &str) -> Result<f64, NoAnswerFound> {
    let refs = find_frame_refs(text);
    NUMBER
        .find_iter(text)
        .filter(|m| {
            !refs
                .iter()
                .any(|r| m.start() < r.span.end && r.span.start < m.end())
        })
        .last()
        .and_then(|m| {
            let value: f64 = m.as_str().parse().ok()?;
            let negative = text[..m.start()].ends_with('-')
                && text[..m.start() - 1]
                    .chars()
                    .next_back()
                    .is_none_or(char::is_whitespace);
            Some(if negative { -value } else { value })
        })
        .ok_or(NoAnswerFound)
}
