use std::fmt;

use serde::{Deserialize, Serialize};

use crate::trace_eval::{contains_frame_ref, extract_frame_refs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Real,
    Synth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ObjectCountCollision,
    ObjectCountMotion,
    ObjectCountTemporal,
    AppearanceOrder,
    RelativeDistance,
    RealFreeForm,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::ObjectCountCollision,
        Category::ObjectCountMotion,
        Category::ObjectCountTemporal,
        Category::AppearanceOrder,
        Category::RelativeDistance,
        Category::RealFreeForm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::ObjectCountCollision => "object_count_collision",
            Category::ObjectCountMotion => "object_count_motion",
            Category::ObjectCountTemporal => "object_count_temporal",
            Category::AppearanceOrder => "appearance_order",
            Category::RelativeDistance => "relative_distance",
            Category::RealFreeForm => "real_free_form",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Real => "real",
            Source::Synth => "synth",
        })
    }
}

/// One (question, frame-aware reasoning, answer) training record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CofSample {
    pub sample_id: String,
    pub video_ref: String,
    pub source: Source,
    pub category: Category,
    pub question: String,
    pub reasoning: Vec<String>,
    pub answer: String,
    /// Sorted, distinct frame IDs cited in the reasoning.
    pub frame_refs: Vec<u32>,
}

impl CofSample {
    /// Builds a sample whose `frame_refs` are derived from the reasoning.
    pub fn new(
        sample_id: impl Into<String>,
        video_ref: impl Into<String>,
        source: Source,
        category: Category,
        question: impl Into<String>,
        reasoning: Vec<String>,
        answer: impl Into<String>,
    ) -> Self {
        let mut s = CofSample {
            sample_id: sample_id.into(),
            video_ref: video_ref.into(),
            source,
            category,
            question: question.into(),
            reasoning,
            answer: answer.into(),
            frame_refs: Vec::new(),
        };
        s.frame_refs = s.derived_refs();
        s
    }

    /// Reasoning steps joined one per line.
    pub fn reasoning_text(&self) -> String {
        self.reasoning.join("\n")
    }

    /// Frame references extracted from the reasoning, sorted.
    pub fn derived_refs(&self) -> Vec<u32> {
        let mut refs = extract_frame_refs(&self.reasoning_text());
        refs.sort_unstable();
        refs
    }

    pub fn question_has_frame_ref(&self) -> bool {
        contains_frame_ref(&self.question)
    }
}
