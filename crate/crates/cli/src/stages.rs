//! Stage implementations shared by the individual subcommands and `pipeline`.

use std::ops::Range;
use std::path::Path;

use cof_core::cof_real::{
    run_real_branch, GenerationClient, RealBranchOutput, RealGenConfig, RejectRecord, RejectStage, RemoteClient,
    RemoteConfig, ReplayClient, VideoAnnotation,
};
use cof_core::frame_align::Remap;
use cof_core::jsonl;
use cof_core::scene_sim::{simulate_scene, SceneAnnotation, SimConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ClientKind;
use crate::error::CliError;

/// One line of an alignment drop report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dropped {
    pub video_id: String,
    pub reason: String,
    pub detail: String,
}

pub fn simulate(config: &SimConfig, seeds: Range<u64>) -> Result<Vec<SceneAnnotation>, CliError> {
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let seeds: Vec<u64> = seeds.collect();
    seeds
        .par_iter()
        .map(|&s| simulate_scene(config, s).map_err(|e| CliError::data(format!("seed {s}"), e)))
        .collect()
}

pub fn read_videos(path: &Path) -> Result<Vec<VideoAnnotation>, CliError> {
    let anns: Vec<VideoAnnotation> = jsonl::read(path)?;
    for (i, a) in anns.iter().enumerate() {
        a.validate()
            .map_err(|m| CliError::data(format!("{}:{} ({})", path.display(), i + 1, a.video_id), m))?;
    }
    Ok(anns)
}

pub fn read_scenes(path: &Path) -> Result<Vec<SceneAnnotation>, CliError> {
    let scenes: Vec<SceneAnnotation> = jsonl::read(path)?;
    for (i, s) in scenes.iter().enumerate() {
        s.validate()
            .map_err(|e| CliError::data(format!("{}:{}", path.display(), i + 1), e))?;
    }
    Ok(scenes)
}

fn id_of_video(a: &VideoAnnotation) -> &str {
    &a.video_id
}

fn id_of_scene(s: &SceneAnnotation) -> &str {
    &s.scene_id
}

fn align_all<T: Remap + Sync + Send>(
    items: &[T],
    id: fn(&T) -> &str,
    max_duration_s: f64,
    frame_budget: usize,
) -> (Vec<T>, Vec<Dropped>) {
    let results: Vec<_> = items
        .par_iter()
        .map(|a| a.align(max_duration_s, frame_budget).map(|(aligned, _)| aligned))
        .collect();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (item, r) in items.iter().zip(results) {
        match r {
            Ok(a) => kept.push(a),
            Err(e) => {
                log::info!("dropping {}: {e}", id(item));
                dropped.push(Dropped {
                    video_id: id(item).to_string(),
                    reason: e.reason().to_string(),
                    detail: e.to_string(),
                });
            }
        }
    }
    (kept, dropped)
}

pub fn align_videos(anns: &[VideoAnnotation], max_duration_s: f64, frame_budget: usize) -> (Vec<VideoAnnotation>, Vec<Dropped>) {
    align_all(anns, id_of_video, max_duration_s, frame_budget)
}

pub fn align_scenes(scenes: &[SceneAnnotation], max_duration_s: f64, frame_budget: usize) -> (Vec<SceneAnnotation>, Vec<Dropped>) {
    align_all(scenes, id_of_scene, max_duration_s, frame_budget)
}

pub fn make_client(kind: ClientKind, fixtures: Option<&Path>, model: &str) -> Result<Box<dyn GenerationClient>, CliError> {
    match kind {
        ClientKind::Replay => {
            let path = fixtures.ok_or_else(|| CliError::Usage("the replay client needs --fixtures".into()))?;
            let client = ReplayClient::from_path(path).map_err(|e| match e {
                cof_core::cof_real::GenerationError::Fixtures(j) => CliError::from(j),
                other => CliError::data(path.display().to_string(), other),
            })?;
            Ok(Box::new(client))
        }
        ClientKind::Remote => {
            let cfg = RemoteConfig::from_env(model).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Box::new(RemoteClient::new(cfg)))
        }
    }
}

/// Aligned annotations through generation, parsing and validation. Drops
/// from alignment are folded into the reject stream.
pub fn real_branch(
    aligned: &[VideoAnnotation],
    dropped: &[Dropped],
    client: &dyn GenerationClient,
    config: &RealGenConfig,
) -> RealBranchOutput {
    let mut out = run_real_branch(aligned, client, config);
    let mut rejects: Vec<RejectRecord> = dropped
        .iter()
        .map(|d| RejectRecord {
            video_id: d.video_id.clone(),
            stage: RejectStage::Align,
            index: None,
            reason: d.reason.clone(),
            detail: d.detail.clone(),
        })
        .collect();
    rejects.append(&mut out.rejects);
    out.rejects = rejects;
    out
}
