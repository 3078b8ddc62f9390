//! Inputs shared by the criterion benches under `benches/`.

use cof_core::frame_align::SourceTimeline;
use cof_core::scene_sim::{simulate_scene, SceneAnnotation, SimConfig};
use cof_core::trace_eval::{ChoiceOption, EvalTask, Gold, Prediction, TaskKind};

pub fn scenes(n: u64) -> Vec<SceneAnnotation> {
    let cfg = SimConfig::default();
    (0..n).map(|seed| simulate_scene(&cfg, seed).expect("default config simulates")).collect()
}

/// A ten-minute 30 fps video with `n_annotated` evenly spread annotated frames
/// inside the first 30 seconds.
pub fn long_timeline(n_annotated: u32) -> SourceTimeline {
    SourceTimeline {
        n_frames: 18_000,
        fps: 30.0,
        annotated_ids: (0..n_annotated).map(|i| 100 + i * (800 / n_annotated.max(1))).collect(),
    }
}

/// Reasoning text with `steps` lines, most citing a frame.
pub fn reasoning_text(steps: usize) -> String {
    (0..steps)
        .map(|i| match i % 4 {
            0 => format!("In Frame {} the red cube moves left.", i % 30 + 1),
            1 => format!("frame-{} shows the sphere stopping.", i % 30 + 1),
            2 => "Nothing else changes in between.".to_string(),
            _ => format!("Frames {} and {} match.", i % 30 + 1, i % 29 + 2),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// `n` tasks split evenly across the three kinds, with one prediction each.
pub fn benchmark(n: usize) -> (Vec<EvalTask>, Vec<Prediction>) {
    let options: Vec<ChoiceOption> = ["A", "B", "C", "D"]
        .iter()
        .map(|l| ChoiceOption { label: l.to_string(), text: format!("option {l}") })
        .collect();
    let mut tasks = Vec::with_capacity(n);
    let mut preds = Vec::with_capacity(n);
    for i in 0..n {
        let task_id = format!("t{i}");
        let (kind, gold, raw, split) = match i % 3 {
            0 => (
                TaskKind::MultipleChoice { options: options.clone() },
                Gold::Text(["A", "B", "C", "D"][i % 4].into()),
                format!("Frame {} shows it.\nAnswer: {}", i % 30 + 1, ["A", "B", "C", "D"][i % 3]),
                "mc",
            ),
            1 => (
                TaskKind::BinaryYesNo,
                Gold::Text("yes".into()),
                format!("In Frame {} it is visible. Answer: {}", i % 30 + 1, if i % 2 == 0 { "yes" } else { "no" }),
                "yn",
            ),
            _ => (
                TaskKind::Numeric,
                Gold::Number(10.0),
                format!("Frames {} to {} show {} objects.\nAnswer: {}", i % 20 + 1, i % 20 + 5, i % 13, i % 13),
                "num",
            ),
        };
        tasks.push(EvalTask { task_id: task_id.clone(), kind, gold, split: split.into() });
        preds.push(Prediction { task_id, raw_text: raw });
    }
    (tasks, preds)
}
