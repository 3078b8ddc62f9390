//! Template-driven CoF samples from simulated scene annotations.

use std::cmp::Ordering;
use std::fmt;

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sample::{Category, CofSample, Source};
use crate::scene_sim::{dist, SceneAnnotation, DEFAULT_MOVING_EPSILON};

#[cfg(test)]
mod tests;

pub const COLLISION_QUESTION: &str = "How many collisions happen in this video?";
pub const MOVING_QUESTION: &str = "How many moving objects are in the video?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Enters,
    Exits,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Enters => "enters",
            Action::Exits => "exits",
        }
    }
}

/// Why a generator declined an instance.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthSkip {
    #[error("object {0} has no entry event")]
    NoEntryEvent(u32),
    #[error("object {0} is never visible")]
    NeverVisible(u32),
    #[error("objects first appear together in frame {0}")]
    AmbiguousOrder(u32),
    #[error("subset must hold 2 to 4 distinct objects, got {0}")]
    BadSubset(usize),
    #[error("object {object_id} never {}", action.as_str())]
    NoSuchEvent { object_id: u32, action: Action },
    #[error("only {0} other objects visible at the event")]
    TooFewNeighbors(usize),
    #[error("closest object is not unique")]
    DistanceTie,
    #[error("no object qualifies")]
    NoCandidates,
    #[error("unknown object {0}")]
    UnknownObject(u32),
}

fn new_sample(scene: &SceneAnnotation, category: Category, question: String, steps: Vec<String>, answer: String) -> CofSample {
    CofSample::new(
        format!("{}:{}:0", scene.scene_id, category),
        scene.scene_id.clone(),
        Source::Synth,
        category,
        question,
        steps,
        answer,
    )
}

fn collision_step(scene: &SceneAnnotation, frame_id: u32, pair: [u32; 2]) -> String {
    format!(
        "A collision happens in Frame {frame_id} between {} and {}",
        scene.display_name(pair[0]),
        scene.display_name(pair[1])
    )
}

fn sorted_collisions(scene: &SceneAnnotation) -> Vec<(u32, [u32; 2])> {
    let mut c: Vec<(u32, [u32; 2])> = scene.collisions.iter().map(|e| (e.frame_id, e.pair)).collect();
    c.sort();
    c
}

pub fn gen_collision_count(scene: &SceneAnnotation) -> CofSample {
    let collisions = sorted_collisions(scene);
    let mut steps: Vec<String> = collisions.iter().map(|&(f, p)| collision_step(scene, f, p)).collect();
    if steps.is_empty() {
        steps.push("No collisions are observed in the video.".into());
    }
    new_sample(
        scene,
        Category::ObjectCountCollision,
        COLLISION_QUESTION.into(),
        steps,
        format!("{} collisions happen in this video.", collisions.len()),
    )
}

/// First visible frame at which each object's speed exceeds `eps`, ordered
/// by that frame then object id.
pub fn moving_objects(scene: &SceneAnnotation, eps: f64) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = scene
        .objects
        .iter()
        .filter_map(|o| {
            (1..=scene.n_frames)
                .find(|&f| {
                    let s = scene.state(f, o.object_id);
                    s.inside_camera && s.speed() > eps
                })
                .map(|f| (f, o.object_id))
        })
        .collect();
    out.sort();
    out
}

pub fn gen_moving_count(scene: &SceneAnnotation, eps: f64) -> CofSample {
    let moving = moving_objects(scene, eps);
    let mut steps: Vec<String> = moving
        .iter()
        .map(|&(f, id)| format!("{} is moving in Frame {f}", scene.display_name(id)))
        .collect();
    if steps.is_empty() {
        steps.push("No moving objects are observed in the video.".into());
    }
    new_sample(
        scene,
        Category::ObjectCountMotion,
        MOVING_QUESTION.into(),
        steps,
        format!("{} moving objects are in the video.", moving.len()),
    )
}

pub fn gen_temporal_count(scene: &SceneAnnotation, anchor: u32) -> Result<CofSample, SynthSkip> {
    scene.object(anchor).ok_or(SynthSkip::UnknownObject(anchor))?;
    let f0 = scene.entry_frame(anchor).ok_or(SynthSkip::NoEntryEvent(anchor))?;
    let name = scene.display_name(anchor);
    let after: Vec<(u32, [u32; 2])> = sorted_collisions(scene).into_iter().filter(|&(f, _)| f >= f0).collect();
    let mut steps = vec![format!("The {name} enters the scene in Frame {f0}")];
    steps.extend(after.iter().map(|&(f, p)| collision_step(scene, f, p)));
    Ok(new_sample(
        scene,
        Category::ObjectCountTemporal,
        format!("After the {name} enters the scene, how many collisions happen?"),
        steps,
        format!("{} collisions happen after the {name} enters the scene.", after.len()),
    ))
}

pub fn gen_appearance_order(scene: &SceneAnnotation, subset: &[u32]) -> Result<CofSample, SynthSkip> {
    let mut distinct = subset.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if !(2..=4).contains(&subset.len()) || distinct.len() != subset.len() {
        return Err(SynthSkip::BadSubset(subset.len()));
    }
    let mut firsts = Vec::with_capacity(subset.len());
    for &id in subset {
        scene.object(id).ok_or(SynthSkip::UnknownObject(id))?;
        firsts.push((scene.first_visible(id).ok_or(SynthSkip::NeverVisible(id))?, id));
    }
    let mut order = firsts.clone();
    order.sort();
    if let Some(w) = order.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(SynthSkip::AmbiguousOrder(w[0].0));
    }
    let names = |items: &[(u32, u32)]| {
        items
            .iter()
            .map(|&(_, id)| scene.display_name(id))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let steps = firsts
        .iter()
        .map(|&(f, id)| format!("{} appears in Frame {f}", scene.display_name(id)))
        .collect();
    Ok(new_sample(
        scene,
        Category::AppearanceOrder,
        format!("what is the appearance order of {} in the video?", names(&firsts)),
        steps,
        names(&order),
    ))
}

/// Surface distance between two objects at a frame: center distance minus
/// both radii, floored at 0.
pub fn surface_distance(scene: &SceneAnnotation, frame_id: u32, a: u32, b: u32) -> f64 {
    let d = dist(scene.state(frame_id, a).position, scene.state(frame_id, b).position);
    (d - scene.objects[a as usize].radius - scene.objects[b as usize].radius).max(0.0)
}

pub fn gen_relative_distance(scene: &SceneAnnotation, target: u32, action: Action) -> Result<CofSample, SynthSkip> {
    scene.object(target).ok_or(SynthSkip::UnknownObject(target))?;
    let frame = match action {
        Action::Enters => scene.entry_frame(target),
        Action::Exits => scene.exit_frame(target),
    }
    .ok_or(SynthSkip::NoSuchEvent { object_id: target, action })?;
    let others: Vec<u32> = scene.visible_objects(frame).filter(|&o| o != target).collect();
    if others.len() < 2 {
        return Err(SynthSkip::TooFewNeighbors(others.len()));
    }
    let dists: Vec<(u32, f64, String)> = others
        .iter()
        .map(|&o| {
            let d = surface_distance(scene, frame, target, o);
            (o, d, format!("{d:.2}"))
        })
        .collect();
    let mut ranked: Vec<&(u32, f64, String)> = dists.iter().collect();
    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));
    let (best, runner_up) = (ranked[0], ranked[1]);
    if best.1 == runner_up.1 || best.2 == runner_up.2 {
        return Err(SynthSkip::DistanceTie);
    }

    let t_name = scene.display_name(target);
    let act = action.as_str();
    let all_names: Vec<String> = others.iter().map(|&o| scene.display_name(o)).collect();
    let steps = dists
        .iter()
        .map(|(o, _, shown)| {
            format!(
                "The {t_name} {act} the scene in Frame {frame}. In Frame {frame}, the distance between {t_name} and {} is {shown}.",
                scene.display_name(*o)
            )
        })
        .collect();
    Ok(new_sample(
        scene,
        Category::RelativeDistance,
        format!(
            "Measuring from the closest point of each object, when {t_name} {act} the scene, which of these objects ({}) is closest to the {t_name}?",
            all_names.join(", ")
        ),
        steps,
        scene.display_name(best.0),
    ))
}

/// Which generators run per scene and how many instances each may produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationPlan {
    pub collision_count: bool,
    pub moving_count: bool,
    pub temporal_count: bool,
    pub appearance_order: bool,
    pub relative_distance: bool,
    pub moving_epsilon: f64,
    pub temporal_per_scene: usize,
    pub appearance_per_scene: usize,
    pub distance_per_scene: usize,
}

impl Default for GenerationPlan {
    fn default() -> Self {
        GenerationPlan {
            collision_count: true,
            moving_count: true,
            temporal_count: true,
            appearance_order: true,
            relative_distance: true,
            moving_epsilon: DEFAULT_MOVING_EPSILON,
            temporal_per_scene: 1,
            appearance_per_scene: 2,
            distance_per_scene: 2,
        }
    }
}

impl GenerationPlan {
    pub fn only(category: Category) -> Self {
        GenerationPlan {
            collision_count: category == Category::ObjectCountCollision,
            moving_count: category == Category::ObjectCountMotion,
            temporal_count: category == Category::ObjectCountTemporal,
            appearance_order: category == Category::AppearanceOrder,
            relative_distance: category == Category::RelativeDistance,
            ..GenerationPlan::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub scene_id: String,
    pub category: Category,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthOutput {
    pub samples: Vec<CofSample>,
    pub skips: Vec<SkipRecord>,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

struct SceneRun<'a> {
    scene: &'a SceneAnnotation,
    out: SynthOutput,
}

impl SceneRun<'_> {
    fn push(&mut self, category: Category, result: Result<CofSample, SynthSkip>) -> bool {
        match result {
            Ok(mut s) => {
                let idx = self.out.samples.iter().filter(|x| x.category == category).count();
                s.sample_id = format!("{}:{}:{idx}", self.scene.scene_id, category);
                self.out.samples.push(s);
                true
            }
            Err(e) => {
                log::debug!("{}: skip {category}: {e}", self.scene.scene_id);
                self.out.skips.push(SkipRecord {
                    scene_id: self.scene.scene_id.clone(),
                    category,
                    reason: e.to_string(),
                });
                false
            }
        }
    }
}

fn synth_scene(scene: &SceneAnnotation, plan: &GenerationPlan, seed: u64) -> SynthOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&scene.scene_id));
    let mut run = SceneRun {
        scene,
        out: SynthOutput::default(),
    };
    let ids: Vec<u32> = scene.objects.iter().map(|o| o.object_id).collect();

    if plan.collision_count {
        run.push(Category::ObjectCountCollision, Ok(gen_collision_count(scene)));
    }
    if plan.moving_count {
        run.push(Category::ObjectCountMotion, Ok(gen_moving_count(scene, plan.moving_epsilon)));
    }
    if plan.temporal_count {
        let mut anchors = ids.clone();
        anchors.shuffle(&mut rng);
        let mut made = 0;
        for a in anchors {
            if made == plan.temporal_per_scene {
                break;
            }
            if scene.entry_frame(a).is_none() {
                continue;
            }
            made += run.push(Category::ObjectCountTemporal, gen_temporal_count(scene, a)) as usize;
        }
        if made == 0 && plan.temporal_per_scene > 0 {
            run.push(Category::ObjectCountTemporal, Err(SynthSkip::NoCandidates));
        }
    }
    if plan.appearance_order && ids.len() >= 2 {
        let mut seen: Vec<Vec<u32>> = Vec::new();
        let mut made = 0;
        for _ in 0..plan.appearance_per_scene * 4 {
            if made == plan.appearance_per_scene {
                break;
            }
            let size = rng.gen_range(2..=ids.len().min(4));
            let subset: Vec<u32> = sample_indices(&mut rng, ids.len(), size).into_iter().map(|i| ids[i]).collect();
            let mut key = subset.clone();
            key.sort_unstable();
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            made += run.push(Category::AppearanceOrder, gen_appearance_order(scene, &subset)) as usize;
        }
    }
    if plan.relative_distance {
        let mut candidates: Vec<(u32, Action)> = Vec::new();
        for &id in &ids {
            if scene.entry_frame(id).is_some() {
                candidates.push((id, Action::Enters));
            }
            if scene.exit_frame(id).is_some() {
                candidates.push((id, Action::Exits));
            }
        }
        candidates.shuffle(&mut rng);
        let mut made = 0;
        for (target, action) in candidates {
            if made == plan.distance_per_scene {
                break;
            }
            made += run.push(Category::RelativeDistance, gen_relative_distance(scene, target, action)) as usize;
        }
    }
    run.out
}

/// Runs the plan over every scene. Scenes are processed in parallel; output
/// is ordered by scene id, then category, then per-category index.
pub fn synth_batch_with_skips(scenes: &[SceneAnnotation], plan: &GenerationPlan, seed: u64) -> SynthOutput {
    let mut per_scene: Vec<(&str, SynthOutput)> = scenes
        .par_iter()
        .map(|s| (s.scene_id.as_str(), synth_scene(s, plan, seed)))
        .collect();
    per_scene.sort_by(|a, b| a.0.cmp(b.0));
    let mut out = SynthOutput::default();
    for (_, mut o) in per_scene {
        o.samples.sort_by_key(|s| s.category);
        out.samples.extend(o.samples);
        out.skips.extend(o.skips);
    }
    out
}

pub fn synth_batch(scenes: &[SceneAnnotation], plan: &GenerationPlan, seed: u64) -> Vec<CofSample> {
    synth_batch_with_skips(scenes, plan, seed).samples
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
