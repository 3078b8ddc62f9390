//! Real-video branch: captions → prompt → completion → samples.

mod client;
mod parse;
mod prompt;

pub use client::{
    generate_all, GenerationClient, GenerationError, GenerationRequest, GenerationResponse, RemoteClient,
    RemoteConfig, ReplayClient, ReplayRecord, ENDPOINT_VAR, KEY_VAR,
};
pub use parse::{parse_generation, split_steps, Field, MalformedCompletion, ParsedCompletion, Triplet};
pub use prompt::{build_prompt, build_prompt_with, INSTRUCTION};

use serde::{Deserialize, Serialize};

use crate::curate::{self, Verdict};
use crate::sample::{Category, CofSample, Source};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caption {
    pub frame_id: u32,
    pub caption: String,
}

/// Key-frame captions for one real video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoAnnotation {
    pub video_id: String,
    pub duration_s: f64,
    pub fps: f64,
    pub captions: Vec<Caption>,
}

impl VideoAnnotation {
    /// `round(duration_s * fps)`, at least 1.
    pub fn n_frames(&self) -> u32 {
        ((self.duration_s * self.fps).round() as u32).max(1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(format!("fps must be positive, got {}", self.fps));
        }
        if self.captions.is_empty() {
            return Err("no captions".into());
        }
        if self.captions.iter().any(|c| c.frame_id == 0) {
            return Err("frame IDs start at 1".into());
        }
        if self.captions.windows(2).any(|w| w[0].frame_id >= w[1].frame_id) {
            return Err("caption frame IDs must be strictly increasing".into());
        }
        Ok(())
    }
}

/// A triplet or completion that did not become a sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RejectRecord {
    pub video_id: String,
    pub stage: RejectStage,
    /// Triplet position inside the completion, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub reason: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectStage {
    Align,
    Generation,
    Parse,
    Validate,
}

/// Turns parsed triplets into samples for a video aligned to `k` frames.
/// Triplets that break sample invariants land in the reject list.
pub fn to_cof_samples(video_id: &str, triplets: &[Triplet], k: usize) -> (Vec<CofSample>, Vec<RejectRecord>) {
    let mut samples = Vec::new();
    let mut rejects = Vec::new();
    for (i, t) in triplets.iter().enumerate() {
        let sample = CofSample::new(
            format!("{video_id}:real:{i}"),
            video_id,
            Source::Real,
            Category::RealFreeForm,
            t.question.clone(),
            t.reasoning.clone(),
            t.answer.clone(),
        );
        match curate::validate(&sample, k) {
            Verdict::Accept => samples.push(sample),
            Verdict::Reject(reason) => rejects.push(RejectRecord {
                video_id: video_id.to_string(),
                stage: RejectStage::Validate,
                index: Some(i),
                reason: reason.as_str().to_string(),
                detail: sample.sample_id,
            }),
        }
    }
    (samples, rejects)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealGenConfig {
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub max_in_flight: usize,
    /// Replaces [`INSTRUCTION`] when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
}

impl Default for RealGenConfig {
    fn default() -> Self {
        RealGenConfig {
            temperature: 0.7,
            max_new_tokens: 1024,
            max_in_flight: 4,
            instruction: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RealBranchOutput {
    pub samples: Vec<CofSample>,
    pub rejects: Vec<RejectRecord>,
}

/// Runs the branch over aligned annotations. Output order follows the input
/// order of annotations, then triplet order.
pub fn run_real_branch(
    annotations: &[VideoAnnotation],
    client: &dyn GenerationClient,
    config: &RealGenConfig,
) -> RealBranchOutput {
    let requests: Vec<GenerationRequest> = annotations
        .iter()
        .map(|a| GenerationRequest {
            video_id: a.video_id.clone(),
            prompt: build_prompt_with(config.instruction.as_deref().unwrap_or(INSTRUCTION), a),
            max_new_tokens: config.max_new_tokens,
            temperature: config.temperature,
        })
        .collect();
    let responses = generate_all(client, &requests, config.max_in_flight);

    let mut out = RealBranchOutput::default();
    for (ann, response) in annotations.iter().zip(responses) {
        let text = match response {
            Ok(r) => r.text,
            Err(e) => {
                log::warn!("{}: generation failed: {e}", ann.video_id);
                out.rejects.push(RejectRecord {
                    video_id: ann.video_id.clone(),
                    stage: RejectStage::Generation,
                    index: None,
                    reason: generation_reason(&e).into(),
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let parsed = parse_generation(&text);
        for malformed in &parsed.rejects {
            let (reason, index) = match malformed {
                MalformedCompletion::NoMarkers => ("no_markers", None),
                MalformedCompletion::MissingMarker { index, .. } => ("missing_marker", Some(*index)),
                MalformedCompletion::OutOfOrder { index, .. } => ("out_of_order", Some(*index)),
                MalformedCompletion::EmptyField { index, .. } => ("empty_field", Some(*index)),
            };
            out.rejects.push(RejectRecord {
                video_id: ann.video_id.clone(),
                stage: RejectStage::Parse,
                index,
                reason: reason.into(),
                detail: malformed.to_string(),
            });
        }
        let (samples, rejects) = to_cof_samples(&ann.video_id, &parsed.triplets, ann.n_frames() as usize);
        out.samples.extend(samples);
        out.rejects.extend(rejects);
    }
    out
}

fn generation_reason(e: &GenerationError) -> &'static str {
    match e {
        GenerationError::Provider { .. } => "provider_error",
        GenerationError::ReplayMiss(_) => "replay_miss",
        GenerationError::Config(_) => "config",
        GenerationError::Fixtures(_) => "fixtures",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triplet(q: &str, steps: &[&str], a: &str) -> Triplet {
        Triplet {
            question: q.into(),
            reasoning: steps.iter().map(|s| s.to_string()).collect(),
            answer: a.into(),
        }
    }

    #[test]
    fn triplets_to_samples_and_rejects() {
        let ts = [
            triplet("Why does he leave?", &["In Frame 2 he stands.", "By Frame 5 he is gone."], "He is late."),
            triplet("What is in Frame 3?", &["a dog"], "a dog"),
            triplet("When does it end?", &["Frame 42 shows the end."], "late"),
        ];
        let (samples, rejects) = to_cof_samples("v9", &ts, 30);
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].frame_refs, vec![2, 5]);
        assert_eq!(samples[0].sample_id, "v9:real:0");
        assert_eq!(samples[0].source, Source::Real);
        assert_eq!(samples[0].category, Category::RealFreeForm);
        let reasons: Vec<&str> = rejects.iter().map(|r| r.reason.as_str()).collect();
        assert_eq!(reasons, vec!["question_reference", "out_of_range"]);
        assert_eq!(rejects[1].index, Some(2));
    }

    #[test]
    fn annotation_validation() {
        let mut a = VideoAnnotation {
            video_id: "v".into(),
            duration_s: 12.0,
            fps: 2.5,
            captions: vec![Caption { frame_id: 1, caption: "x".into() }],
        };
        assert_eq!(a.n_frames(), 30);
        assert!(a.validate().is_ok());
        a.captions.push(Caption { frame_id: 1, caption: "y".into() });
        assert!(a.validate().is_err());
        a.captions.clear();
        assert!(a.validate().is_err());
    }

    #[test]
    fn branch_with_replay_is_deterministic() {
        let ann = VideoAnnotation {
            video_id: "v1".into(),
            duration_s: 10.0,
            fps: 1.0,
            captions: vec![
                Caption { frame_id: 2, caption: "A girl kicks a ball.".into() },
                Caption { frame_id: 7, caption: "The ball hits a wall.".into() },
            ],
        };
        let text = "**Question**: What does the ball hit?\n**Reasoning**:\n1. In Frame 2 the girl kicks it.\n2. In Frame 7 it reaches a wall.\n**Answer**: A wall.\n**Question**: Broken\n**Answer**: x";
        let client = ReplayClient::from_records([ReplayRecord { key: "v1".into(), text: text.into() }]);
        let mut missing = ann.clone();
        missing.video_id = "v2".into();
        let run = || run_real_branch(&[ann.clone(), missing.clone()], &client, &RealGenConfig::default());
        let out = run();
        assert_eq!(out, run());
        assert_eq!(out.samples.len(), 1);
        assert_eq!(out.samples[0].frame_refs, vec![2, 7]);
        let stages: Vec<(RejectStage, &str)> = out.rejects.iter().map(|r| (r.stage, r.reason.as_str())).collect();
        assert_eq!(
            stages,
            vec![(RejectStage::Parse, "missing_marker"), (RejectStage::Generation, "replay_miss")]
        );
    }
}
