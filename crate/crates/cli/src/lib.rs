//! `cof-forge`: simulate → align → synth / real-gen → curate → trace-stats / eval.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod stages;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cof_core::cof_synth::{synth_batch_with_skips, GenerationPlan};
use cof_core::curate::{self, manifest as dataset_manifest};
use cof_core::frame_align::{DEFAULT_FRAME_BUDGET, DEFAULT_MAX_DURATION_S};
use cof_core::jsonl;
use cof_core::sample::CofSample;
use cof_core::trace_eval::{render_histogram, score, trace_histogram, EvalTask, Prediction};

pub use config::{ClientKind, PipelineConfig, SeedRange};
pub use error::CliError;
pub use manifest::RunManifest;
pub use pipeline::{run_pipeline, PipelineSummary};

use manifest::{manifest_path_for, write_file};

#[derive(Debug, Parser)]
#[command(name = "cof-forge", version, about = "Frame-referenced reasoning data pipeline")]
pub struct Cli {
    /// Worker threads for scene/video-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate synthetic scene annotations.
    Simulate(SimulateArgs),
    /// Clip and downsample annotations onto the model's frame budget.
    Align(AlignArgs),
    /// Template samples from (aligned) scenes.
    Synth(SynthArgs),
    /// Samples from aligned real-video captions via a text-generation client.
    RealGen(RealGenArgs),
    /// Merge, filter, deduplicate and rebalance sample files.
    Curate(CurateArgs),
    /// Frame-reference histogram of model outputs.
    TraceStats(TraceStatsArgs),
    /// Score predictions against a task file.
    Eval(EvalArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Half-open range, e.g. 0..20. Overrides the config.
    #[arg(long)]
    pub seeds: Option<SeedRange>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AnnotationKind {
    Video,
    Scene,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Dropped-video list, one (video_id, reason) record per line.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value = "video")]
    pub kind: AnnotationKind,
    #[arg(long, default_value_t = DEFAULT_MAX_DURATION_S)]
    pub max_duration: f64,
    #[arg(long, default_value_t = DEFAULT_FRAME_BUDGET)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub scenes: PathBuf,
    /// Config file whose [synth] table is the generation plan.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub skips: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RealGenArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, value_enum)]
    pub client: ClientKind,
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub rejects: PathBuf,
    /// Config file providing the [real] settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    /// Comma-separated sample files.
    #[arg(long = "in", value_delimiter = ',', required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = curate::DEFAULT_TARGET_ZERO_REF_FRACTION)]
    pub target_zero_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_FRAME_BUDGET)]
    pub budget: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub rejected: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceStatsArgs {
    #[arg(long)]
    pub preds: PathBuf,
    /// CSV histogram output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long)]
    pub preds: PathBuf,
    /// JSON report; a text table and a histogram CSV are written beside it.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Parses `argv` and runs the command, returning the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default())
        .filter_level(level)
        .parse_default_env()
        .try_init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 2;
        }
        pool = pool.num_threads(j);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Align(a) => cmd_align(a),
        Command::Synth(a) => cmd_synth(a),
        Command::RealGen(a) => cmd_real_gen(a),
        Command::Curate(a) => cmd_curate(a),
        Command::TraceStats(a) => cmd_trace_stats(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Pipeline(a) => {
            let cfg = PipelineConfig::load(&a.config)?;
            let out_dir = a
                .out_dir
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| CliError::Usage("no output directory: pass --out-dir or set output_dir".into()))?;
            let summary = run_pipeline(&cfg, &out_dir)?;
            print!("{}", summary.render());
            Ok(())
        }
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let seeds = a.seeds.unwrap_or(cfg.simulate.seeds.clone());
    let scenes = stages::simulate(&cfg.scene, seeds.0.clone())?;
    jsonl::write(&a.out, &scenes)?;

    let mut m = RunManifest::new("simulate");
    m.config_hash = Some(manifest::sha256_hex(cfg.canonical().as_bytes()));
    m.seed("scenes", seeds.to_string());
    m.count("scenes", scenes.len());
    m.count("collisions", scenes.iter().map(|s| s.collisions.len()).sum());
    m.output(&a.out, Some(scenes.len()))?;
    m.write(&manifest_path_for(&a.out))?;
    println!("simulated {} scenes -> {}", scenes.len(), a.out.display());
    Ok(())
}

fn cmd_align(a: AlignArgs) -> Result<(), CliError> {
    if !(a.max_duration > 0.0) || a.budget == 0 {
        return Err(CliError::Usage("--max-duration and --budget must be positive".into()));
    }
    let (n_in, n_out, dropped) = match a.kind {
        AnnotationKind::Video => {
            let anns = stages::read_videos(&a.input)?;
            let (kept, dropped) = stages::align_videos(&anns, a.max_duration, a.budget);
            jsonl::write(&a.out, &kept)?;
            (anns.len(), kept.len(), dropped)
        }
        AnnotationKind::Scene => {
            let scenes = stages::read_scenes(&a.input)?;
            let (kept, dropped) = stages::align_scenes(&scenes, a.max_duration, a.budget);
            jsonl::write(&a.out, &kept)?;
            (scenes.len(), kept.len(), dropped)
        }
    };
    jsonl::write(&a.report, &dropped)?;

    let mut m = RunManifest::new("align");
    m.count("aligned", n_out).count("dropped", dropped.len());
    m.input(&a.input, Some(n_in))?;
    m.output(&a.out, Some(n_out))?.output(&a.report, Some(dropped.len()))?;
    m.write(&manifest_path_for(&a.out))?;
    println!("aligned {n_out} of {n_in}; {} dropped", dropped.len());
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<(), CliError> {
    let plan: GenerationPlan = load_config(a.plan.as_deref())?.synth;
    let scenes = stages::read_scenes(&a.scenes)?;
    let out = synth_batch_with_skips(&scenes, &plan, a.seed);
    jsonl::write(&a.out, &out.samples)?;

    let mut m = RunManifest::new("synth");
    m.seed("synth", a.seed);
    m.config_hash = Some(manifest::sha256_hex(toml::to_string(&plan).expect("plan serializes").as_bytes()));
    m.count("samples", out.samples.len()).count("skipped", out.skips.len());
    m.input(&a.scenes, Some(scenes.len()))?;
    m.output(&a.out, Some(out.samples.len()))?;
    if let Some(p) = &a.skips {
        jsonl::write(p, &out.skips)?;
        m.output(p, Some(out.skips.len()))?;
    }
    m.write(&manifest_path_for(&a.out))?;
    println!("{} samples from {} scenes ({} skipped instances)", out.samples.len(), scenes.len(), out.skips.len());
    Ok(())
}

fn cmd_real_gen(a: RealGenArgs) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let model = a.model.unwrap_or(cfg.real.model.clone());
    let anns = stages::read_videos(&a.annotations)?;
    let client = stages::make_client(a.client, a.fixtures.as_deref(), &model)?;
    let out = stages::real_branch(&anns, &[], client.as_ref(), &cfg.real.gen_config());
    jsonl::write(&a.out, &out.samples)?;
    jsonl::write(&a.rejects, &out.rejects)?;

    let mut m = RunManifest::new("real-gen");
    m.count("samples", out.samples.len()).count("rejects", out.rejects.len());
    m.input(&a.annotations, Some(anns.len()))?;
    if let Some(f) = &a.fixtures {
        m.input(f, None)?;
    }
    m.output(&a.out, Some(out.samples.len()))?.output(&a.rejects, Some(out.rejects.len()))?;
    m.write(&manifest_path_for(&a.out))?;
    println!("{} samples, {} rejects", out.samples.len(), out.rejects.len());
    Ok(())
}

fn cmd_curate(a: CurateArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.target_zero_frac) {
        return Err(CliError::Usage("--target-zero-frac must lie in [0, 1]".into()));
    }
    let mut m = RunManifest::new("curate");
    let mut all: Vec<CofSample> = Vec::new();
    for p in &a.inputs {
        let s = curate::read_dataset(p)?;
        m.input(p, Some(s.len()))?;
        all.extend(s);
    }
    let n_in = all.len();
    let result = curate::curate(all, a.budget, a.target_zero_frac, a.seed);
    let stats = dataset_manifest(&result.samples).map_err(|e| CliError::data(a.out.display().to_string(), e))?;
    curate::write_dataset(&result.samples, &a.out)?;
    write_json(&a.manifest, &stats)?;
    let table_path = a.manifest.with_extension("txt");
    write_file(&table_path, stats.render_table().as_bytes())?;

    m.seed("rebalance", a.seed);
    m.count("input", n_in)
        .count("rejected", result.rejected.len())
        .count("duplicates", result.duplicates)
        .count("rebalanced_away", result.rebalanced_away)
        .count("kept", result.samples.len());
    m.output(&a.out, Some(result.samples.len()))?.output(&a.manifest, None)?.output(&table_path, None)?;
    if let Some(r) = &a.rejected {
        jsonl::write(r, &result.rejected)?;
        m.output(r, Some(result.rejected.len()))?;
    }
    m.write(&manifest_path_for(&a.out))?;
    print!("{}", stats.render_table());
    Ok(())
}

fn cmd_trace_stats(a: TraceStatsArgs) -> Result<(), CliError> {
    let preds: Vec<Prediction> = jsonl::read(&a.preds)?;
    let hist = trace_histogram(&preds);
    write_file(&a.out, hist.to_csv().as_bytes())?;
    let mut m = RunManifest::new("trace-stats");
    m.count("predictions", preds.len());
    m.input(&a.preds, Some(preds.len()))?;
    m.output(&a.out, None)?;
    m.write(&manifest_path_for(&a.out))?;
    print!("{}", render_histogram(&hist));
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let tasks: Vec<EvalTask> = jsonl::read(&a.tasks)?;
    for (i, t) in tasks.iter().enumerate() {
        t.validate()
            .map_err(|m| CliError::data(format!("{}:{} ({})", a.tasks.display(), i + 1, t.task_id), m))?;
    }
    let preds: Vec<Prediction> = jsonl::read(&a.preds)?;
    let report = score(&tasks, &preds).map_err(|e| CliError::data(a.preds.display().to_string(), e))?;
    write_json(&a.report, &report)?;
    let table = a.report.with_extension("txt");
    let csv = a.report.with_extension("csv");
    write_file(&table, report.render_table().as_bytes())?;
    write_file(&csv, report.histogram.to_csv().as_bytes())?;

    let mut m = RunManifest::new("eval");
    m.count("tasks", tasks.len()).count("predictions", preds.len());
    m.input(&a.tasks, Some(tasks.len()))?.input(&a.preds, Some(preds.len()))?;
    m.output(&a.report, None)?.output(&table, None)?.output(&csv, None)?;
    m.write(&manifest_path_for(&a.report))?;
    print!("{}", report.render_table());
    Ok(())
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}
