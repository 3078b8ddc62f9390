//! End-to-end run over a [`PipelineConfig`].

use std::fmt::Write as _;
use std::path::Path;

use cof_core::cof_synth::synth_batch_with_skips;
use cof_core::curate::{self, DatasetManifest};
use cof_core::jsonl;
use cof_core::sample::CofSample;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::manifest::{sha256_hex, write_file, RunManifest};
use crate::{stages, write_json};

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub scenes: usize,
    pub synth_samples: usize,
    pub real_videos: usize,
    pub real_samples: usize,
    pub real_rejects: usize,
    pub dataset: DatasetManifest,
    pub run: RunManifest,
}

impl PipelineSummary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenes          {:>8}", self.scenes);
        let _ = writeln!(out, "synth samples   {:>8}", self.synth_samples);
        let _ = writeln!(out, "real videos     {:>8}", self.real_videos);
        let _ = writeln!(out, "real samples    {:>8}", self.real_samples);
        let _ = writeln!(out, "real rejects    {:>8}", self.real_rejects);
        out.push('\n');
        out.push_str(&self.dataset.render_table());
        out
    }
}

/// Output file names inside the run directory.
pub mod files {
    pub const SCENES: &str = "scenes.jsonl";
    pub const SCENES_ALIGNED: &str = "scenes_aligned.jsonl";
    pub const SCENES_DROPPED: &str = "scenes_dropped.jsonl";
    pub const SYNTH: &str = "synth_samples.jsonl";
    pub const SYNTH_SKIPS: &str = "synth_skips.jsonl";
    pub const REAL_ALIGNED: &str = "real_aligned.jsonl";
    pub const REAL: &str = "real_samples.jsonl";
    pub const REAL_REJECTS: &str = "real_rejects.jsonl";
    pub const DATASET: &str = "dataset.jsonl";
    pub const CURATE_REJECTED: &str = "curate_rejected.jsonl";
    pub const STATS_JSON: &str = "dataset_manifest.json";
    pub const STATS_TXT: &str = "dataset_manifest.txt";
    pub const HISTOGRAM_CSV: &str = "frame_ref_histogram.csv";
    pub const RUN: &str = "run_manifest.json";
}

pub fn run_pipeline(cfg: &PipelineConfig, out_dir: &Path) -> Result<PipelineSummary, CliError> {
    cfg.validate().map_err(CliError::Usage)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let path = |name: &str| out_dir.join(name);
    let (max_s, budget) = (cfg.align.max_duration_s, cfg.align.frame_budget);

    let mut run = RunManifest::new("pipeline");
    run.config_hash = Some(sha256_hex(cfg.canonical().as_bytes()));
    run.seed("master", cfg.seed).seed("scenes", cfg.simulate.seeds.to_string());

    // synthetic branch
    let scenes = stages::simulate(&cfg.scene, cfg.simulate.seeds.0.clone())?;
    jsonl::write(path(files::SCENES), &scenes)?;
    let (aligned_scenes, scene_drops) = stages::align_scenes(&scenes, max_s, budget);
    jsonl::write(path(files::SCENES_ALIGNED), &aligned_scenes)?;
    jsonl::write(path(files::SCENES_DROPPED), &scene_drops)?;
    let synth = synth_batch_with_skips(&aligned_scenes, &cfg.synth, cfg.seed);
    jsonl::write(path(files::SYNTH), &synth.samples)?;
    jsonl::write(path(files::SYNTH_SKIPS), &synth.skips)?;

    // real branch
    let mut real_samples: Vec<CofSample> = Vec::new();
    let mut real_videos = 0;
    let mut real_rejects = 0;
    if let Some(ann_path) = &cfg.real.annotations {
        let anns = stages::read_videos(ann_path)?;
        real_videos = anns.len();
        run.input(ann_path, Some(anns.len()))?;
        if let Some(f) = &cfg.real.fixtures {
            run.input(f, None)?;
        }
        let (aligned, dropped) = stages::align_videos(&anns, max_s, budget);
        jsonl::write(path(files::REAL_ALIGNED), &aligned)?;
        let client = stages::make_client(cfg.real.client, cfg.real.fixtures.as_deref(), &cfg.real.model)?;
        let out = stages::real_branch(&aligned, &dropped, client.as_ref(), &cfg.real.gen_config());
        jsonl::write(path(files::REAL), &out.samples)?;
        jsonl::write(path(files::REAL_REJECTS), &out.rejects)?;
        real_rejects = out.rejects.len();
        real_samples = out.samples;
    }

    // final dataset
    let mut merged = synth.samples.clone();
    merged.extend(real_samples.iter().cloned());
    let n_merged = merged.len();
    let curated = curate::curate(merged, budget, cfg.curate.target_zero_ref_fraction, cfg.seed);
    let stats = curate::manifest(&curated.samples).map_err(|e| CliError::data(files::DATASET, e))?;
    curate::write_dataset(&curated.samples, path(files::DATASET))?;
    jsonl::write(path(files::CURATE_REJECTED), &curated.rejected)?;
    write_json(&path(files::STATS_JSON), &stats)?;
    write_file(&path(files::STATS_TXT), stats.render_table().as_bytes())?;
    write_file(&path(files::HISTOGRAM_CSV), stats.histogram.to_csv().as_bytes())?;

    run.count("scenes", scenes.len())
        .count("scenes_dropped", scene_drops.len())
        .count("synth_samples", synth.samples.len())
        .count("synth_skips", synth.skips.len())
        .count("real_videos", real_videos)
        .count("real_samples", real_samples.len())
        .count("real_rejects", real_rejects)
        .count("merged", n_merged)
        .count("curate_rejected", curated.rejected.len())
        .count("duplicates", curated.duplicates)
        .count("rebalanced_away", curated.rebalanced_away)
        .count("dataset", curated.samples.len());
    let outputs: [(&str, Option<usize>); 8] = [
        (files::SCENES, Some(scenes.len())),
        (files::SCENES_ALIGNED, Some(aligned_scenes.len())),
        (files::SYNTH, Some(synth.samples.len())),
        (files::DATASET, Some(curated.samples.len())),
        (files::CURATE_REJECTED, Some(curated.rejected.len())),
        (files::STATS_JSON, None),
        (files::STATS_TXT, None),
        (files::HISTOGRAM_CSV, None),
    ];
    for (name, n) in outputs {
        run.output_in(out_dir, &path(name), n)?;
    }
    if cfg.real.annotations.is_some() {
        run.output_in(out_dir, &path(files::REAL), Some(real_samples.len()))?;
        run.output_in(out_dir, &path(files::REAL_REJECTS), Some(real_rejects))?;
    }
    run.write(&path(files::RUN))?;

    Ok(PipelineSummary {
        scenes: scenes.len(),
        synth_samples: synth.samples.len(),
        real_videos,
        real_samples: real_samples.len(),
        real_rejects,
        dataset: stats,
        run,
    })
}
