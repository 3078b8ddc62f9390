//! Frame-referenced chain-of-thought data generation: scene simulation,
//! frame alignment, template and LLM-driven sample generation, curation and
//! trace evaluation.

pub mod cof_real;
pub mod cof_synth;
pub mod curate;
pub mod frame_align;
pub mod jsonl;
pub mod sample;
pub mod scene_sim;
pub mod trace_eval;

pub use cof_real::{Caption, VideoAnnotation};
pub use frame_align::{AlignmentMap, SourceTimeline};
pub use sample::{Category, CofSample, Source};
pub use scene_sim::{ObjectSpec, SceneAnnotation, SimConfig};
pub use trace_eval::{EvalTask, Prediction};
