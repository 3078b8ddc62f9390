//! Exhaustive re-derivation of scene facts from raw per-frame positions.
//!
//! Nothing here reads `SceneAnnotation::collisions` or the annotation helper
//! methods; every fact is recomputed by scanning frames so that it can serve
//! as an oracle for the template generators.

use std::collections::BTreeMap;

use super::{dist, SceneAnnotation};

#[derive(Debug, Clone)]
pub struct SceneFacts<'a> {
    scene: &'a SceneAnnotation,
    /// Collisions recomputed from positions, as `(frame_id, lo, hi)` in
    /// frame order, then pair order.
    pub collisions: Vec<(u32, u32, u32)>,
    /// First visible frame per object id.
    pub first_visible: BTreeMap<u32, Option<u32>>,
    /// First invisible→visible transition per object id.
    pub entries: BTreeMap<u32, Option<u32>>,
    /// Last visible frame before the first visible→invisible transition.
    pub exits: BTreeMap<u32, Option<u32>>,
}

pub fn brute_force_facts(scene: &SceneAnnotation) -> SceneFacts<'_> {
    let n_obj = scene.objects.len();
    let frame = |k: usize, obj: usize| &scene.frames[k][obj];

    let mut collisions = Vec::new();
    for a in 0..n_obj {
        for b in a + 1..n_obj {
            let reach = scene.objects[a].radius + scene.objects[b].radius;
            let mut touching = false;
            for k in 0..scene.frames.len() {
                let (sa, sb) = (frame(k, a), frame(k, b));
                let d = dist(sa.position, sb.position);
                if d >= reach {
                    touching = false;
                } else if sa.inside_camera && sb.inside_camera && !touching {
                    touching = true;
                    collisions.push((k as u32 + 1, a as u32, b as u32));
                }
            }
        }
    }
    collisions.sort();

    let mut first_visible = BTreeMap::new();
    let mut entries = BTreeMap::new();
    let mut exits = BTreeMap::new();
    for obj in 0..n_obj {
        let mut first = None;
        let mut entry = None;
        let mut exit = None;
        let mut prev: Option<bool> = None;
        for k in 0..scene.frames.len() {
            let vis = frame(k, obj).inside_camera;
            if vis && first.is_none() {
                first = Some(k as u32 + 1);
            }
            match prev {
                Some(false) if vis && entry.is_none() => entry = Some(k as u32 + 1),
                Some(true) if !vis && exit.is_none() => exit = Some(k as u32),
                _ => {}
            }
            prev = Some(vis);
        }
        first_visible.insert(obj as u32, first);
        entries.insert(obj as u32, entry);
        exits.insert(obj as u32, exit);
    }

    SceneFacts {
        scene,
        collisions,
        first_visible,
        entries,
        exits,
    }
}

impl SceneFacts<'_> {
    pub fn collision_count(&self) -> usize {
        self.collisions.len()
    }

    /// Objects whose speed exceeds `eps` in at least one visible frame,
    /// mapped to the first such frame.
    pub fn moving(&self, eps: f64) -> BTreeMap<u32, u32> {
        let mut out = BTreeMap::new();
        for (k, states) in self.scene.frames.iter().enumerate() {
            for s in states {
                let v = s.velocity;
                let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if s.inside_camera && speed > eps {
                    out.entry(s.object_id).or_insert(k as u32 + 1);
                }
            }
        }
        out
    }

    /// Center distances from `target` to every other object visible at
    /// `frame_id`, ordered by object id.
    pub fn distances(&self, frame_id: u32, target: u32) -> Vec<(u32, f64)> {
        let states = &self.scene.frames[frame_id as usize - 1];
        let t = &states[target as usize];
        states
            .iter()
            .filter(|s| s.object_id != target && s.inside_camera)
            .map(|s| (s.object_id, dist(t.position, s.position)))
            .collect()
    }
}
