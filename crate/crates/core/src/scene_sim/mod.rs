//! Deterministic kinematic simulator for CLEVRER-style scene annotations.
//!
//! Objects move linearly between frames and collide pairwise with an
//! equal-mass restitution impulse along the line of centers. The output is
//! the raw per-frame annotation (visibility, position, velocity, collision
//! events) that the synthetic template generators consume.

mod facts;

pub use facts::{brute_force_facts, SceneFacts};

use std::fmt;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

/// Number of distinct (color, material, shape) combinations.
pub const MAX_DISTINCT_OBJECTS: usize = Color::ALL.len() * Material::ALL.len() * Shape::ALL.len();

/// Default speed below which an object counts as stationary.
pub const DEFAULT_MOVING_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Cube,
    Sphere,
    Cylinder,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Cube, Shape::Sphere, Shape::Cylinder];

    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Sphere => "sphere",
            Shape::Cylinder => "cylinder",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Material {
    Metal,
    Rubber,
}

impl Material {
    pub const ALL: [Material; 2] = [Material::Metal, Material::Rubber];

    pub fn as_str(self) -> &'static str {
        match self {
            Material::Metal => "metal",
            Material::Rubber => "rubber",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Gray,
    Red,
    Blue,
    Green,
    Brown,
    Purple,
    Cyan,
    Yellow,
}

impl Color {
    pub const ALL: [Color; 8] = [
        Color::Gray,
        Color::Red,
        Color::Blue,
        Color::Green,
        Color::Brown,
        Color::Purple,
        Color::Cyan,
        Color::Yellow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Color::Gray => "gray",
            Color::Red => "red",
            Color::Blue => "blue",
            Color::Green => "green",
            Color::Brown => "brown",
            Color::Purple => "purple",
            Color::Cyan => "cyan",
            Color::Yellow => "yellow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub object_id: u32,
    pub shape: Shape,
    pub material: Material,
    pub color: Color,
    pub radius: f64,
}

impl ObjectSpec {
    /// "<color> <material> <shape>", the name templates use for the object.
    pub fn display_name(&self) -> String {
        format!(
            "{} {} {}",
            self.color.as_str(),
            self.material.as_str(),
            self.shape.as_str()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectState {
    pub object_id: u32,
    pub inside_camera: bool,
    pub position: Vec3,
    pub velocity: Vec3,
}

impl ObjectState {
    pub fn speed(&self) -> f64 {
        norm(self.velocity)
    }
}

/// A collision between two distinct objects. `pair` is stored ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionEvent {
    pub frame_id: u32,
    pub pair: [u32; 2],
}

impl CollisionEvent {
    pub fn new(frame_id: u32, a: u32, b: u32) -> Self {
        CollisionEvent {
            frame_id,
            pair: [a.min(b), a.max(b)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneAnnotation {
    pub scene_id: String,
    pub fps: f64,
    pub n_frames: u32,
    pub objects: Vec<ObjectSpec>,
    /// `frames[k - 1]` holds the states of frame `k`, ordered by object id.
    pub frames: Vec<Vec<ObjectState>>,
    pub collisions: Vec<CollisionEvent>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("{requested} objects requested but only {MAX_DISTINCT_OBJECTS} distinct display names exist")]
    TooManyObjects { requested: u32 },
    #[error("scene {scene_id}: {reason}")]
    InvalidScene { scene_id: String, reason: String },
}

impl SceneAnnotation {
    pub fn object(&self, object_id: u32) -> Option<&ObjectSpec> {
        self.objects.get(object_id as usize)
    }

    pub fn state(&self, frame_id: u32, object_id: u32) -> &ObjectState {
        &self.frames[frame_id as usize - 1][object_id as usize]
    }

    pub fn display_name(&self, object_id: u32) -> String {
        self.objects[object_id as usize].display_name()
    }

    /// First frame in which the object is inside the camera bounds.
    pub fn first_visible(&self, object_id: u32) -> Option<u32> {
        (1..=self.n_frames).find(|&f| self.state(f, object_id).inside_camera)
    }

    /// First frame at which the object becomes visible after having been
    /// outside the camera. `None` when it is visible from frame 1 or never.
    pub fn entry_frame(&self, object_id: u32) -> Option<u32> {
        (2..=self.n_frames).find(|&f| {
            !self.state(f - 1, object_id).inside_camera && self.state(f, object_id).inside_camera
        })
    }

    /// Last visible frame before the object first leaves the camera.
    pub fn exit_frame(&self, object_id: u32) -> Option<u32> {
        (2..=self.n_frames)
            .find(|&f| {
                self.state(f - 1, object_id).inside_camera && !self.state(f, object_id).inside_camera
            })
            .map(|f| f - 1)
    }

    pub fn visible_objects(&self, frame_id: u32) -> impl Iterator<Item = u32> + '_ {
        self.frames[frame_id as usize - 1]
            .iter()
            .filter(|s| s.inside_camera)
            .map(|s| s.object_id)
    }

    /// Checks the structural invariants of the annotation.
    pub fn validate(&self) -> Result<(), SceneError> {
        let fail = |reason: String| {
            Err(SceneError::InvalidScene {
                scene_id: self.scene_id.clone(),
                reason,
            })
        };
        if !(self.fps > 0.0) || self.n_frames == 0 {
            return fail("fps and n_frames must be positive".into());
        }
        if self.frames.len() != self.n_frames as usize {
            return fail(format!(
                "{} frame entries for n_frames = {}",
                self.frames.len(),
                self.n_frames
            ));
        }
        let mut names = std::collections::HashSet::new();
        for (idx, obj) in self.objects.iter().enumerate() {
            if obj.object_id as usize != idx {
                return fail(format!("object ids not contiguous at index {idx}"));
            }
            if !(obj.radius > 0.0) {
                return fail(format!("object {idx} has non-positive radius"));
            }
            if !names.insert(obj.display_name()) {
                return fail(format!("duplicate display name {}", obj.display_name()));
            }
        }
        for (k, states) in self.frames.iter().enumerate() {
            if states.len() != self.objects.len()
                || states
                    .iter()
                    .enumerate()
                    .any(|(i, s)| s.object_id as usize != i)
            {
                return fail(format!("frame {} does not hold one state per object", k + 1));
            }
        }
        let mut prev: Option<&CollisionEvent> = None;
        for ev in &self.collisions {
            if ev.frame_id < 1 || ev.frame_id > self.n_frames {
                return fail(format!("collision frame {} out of range", ev.frame_id));
            }
            if ev.pair[0] >= ev.pair[1] || ev.pair[1] as usize >= self.objects.len() {
                return fail(format!("bad collision pair {:?}", ev.pair));
            }
            if let Some(p) = prev {
                if p.frame_id > ev.frame_id || p == ev {
                    return fail("collisions unsorted or duplicated".into());
                }
            }
            prev = Some(ev);
        }
        Ok(())
    }
}

/// Axis-aligned camera box; a position is visible iff it lies inside (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraBounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl CameraBounds {
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

impl Default for CameraBounds {
    fn default() -> Self {
        CameraBounds {
            min: [-4.0, -4.0, 0.0],
            max: [4.0, 4.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Inclusive range of the object count.
    pub n_objects: [u32; 2],
    pub n_frames: u32,
    pub fps: f64,
    pub camera: CameraBounds,
    /// Inclusive range of initial speeds for moving objects.
    pub speed: [f64; 2],
    pub radius: [f64; 2],
    pub restitution: f64,
    /// Objects may start outside the camera box and drift in.
    pub allow_entry: bool,
    /// Objects may leave the camera box. When false they bounce off its walls.
    pub allow_exit: bool,
    pub entry_fraction: f64,
    pub stationary_fraction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_objects: [3, 6],
            n_frames: 128,
            fps: 25.0,
            camera: CameraBounds::default(),
            speed: [0.5, 2.5],
            radius: [0.3, 0.6],
            restitution: 0.9,
            allow_entry: true,
            allow_exit: true,
            entry_fraction: 0.35,
            stationary_fraction: 0.25,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::InvalidConfig(m.to_string()));
        if self.n_objects[0] > self.n_objects[1] {
            return bad("n_objects range is empty");
        }
        if self.n_objects[1] as usize > MAX_DISTINCT_OBJECTS {
            return Err(SceneError::TooManyObjects {
                requested: self.n_objects[1],
            });
        }
        if self.n_frames < 2 {
            return bad("n_frames must be at least 2");
        }
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return bad("fps must be positive");
        }
        if !(self.speed[0] >= 0.0 && self.speed[0] <= self.speed[1]) {
            return bad("speed range is empty or negative");
        }
        if !(self.radius[0] > 0.0 && self.radius[0] <= self.radius[1]) {
            return bad("radius range is empty or non-positive");
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return bad("restitution must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.entry_fraction)
            || !(0.0..=1.0).contains(&self.stationary_fraction)
        {
            return bad("fractions must lie in [0, 1]");
        }
        if (0..3).any(|i| !(self.camera.min[i] < self.camera.max[i])) {
            return bad("camera bounds are empty");
        }
        Ok(())
    }
}

/// Initial condition of one object for [`run_dynamics`].
#[derive(Debug, Clone, PartialEq)]
pub struct InitialObject {
    pub spec: ObjectSpec,
    pub position: Vec3,
    pub velocity: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    pub n_frames: u32,
    pub fps: f64,
    pub camera: CameraBounds,
    pub restitution: f64,
    pub allow_exit: bool,
}

/// Advances the given objects frame by frame and records the annotation.
///
/// Frame 1 holds the initial positions; every later frame advances each
/// position by `velocity / fps`. After the advance, each visible pair whose
/// center distance is below the sum of radii and which is not already in
/// contact produces a [`CollisionEvent`] and an impulse. A pair leaves contact
/// once its distance is back at or above the sum of radii. Recorded
/// velocities are post-impulse.
pub fn run_dynamics(scene_id: impl Into<String>, objects: Vec<InitialObject>, params: &Dynamics) -> SceneAnnotation {
    let n = objects.len();
    let specs: Vec<ObjectSpec> = objects.iter().map(|o| o.spec.clone()).collect();
    let mut pos: Vec<Vec3> = objects.iter().map(|o| o.position).collect();
    let mut vel: Vec<Vec3> = objects.iter().map(|o| o.velocity).collect();
    let mut in_contact = vec![false; n * n];
    let mut frames = Vec::with_capacity(params.n_frames as usize);
    let mut collisions = Vec::new();

    for frame_id in 1..=params.n_frames {
        let prev_pos = pos.clone();
        if frame_id > 1 {
            for (p, v) in pos.iter_mut().zip(&vel) {
                for i in 0..3 {
                    p[i] += v[i] / params.fps;
                }
            }
        }
        let visible: Vec<bool> = pos.iter().map(|p| params.camera.contains(*p)).collect();

        for a in 0..n {
            for b in a + 1..n {
                let reach = specs[a].radius + specs[b].radius;
                let d = dist(pos[a], pos[b]);
                if d >= reach {
                    in_contact[a * n + b] = false;
                } else if visible[a] && visible[b] && !in_contact[a * n + b] {
                    in_contact[a * n + b] = true;
                    collisions.push(CollisionEvent::new(frame_id, a as u32, b as u32));
                    let (va, vb) = collide(
                        (prev_pos[a], prev_pos[b]),
                        (pos[a], pos[b]),
                        vel[a],
                        vel[b],
                        params.restitution,
                    );
                    vel[a] = va;
                    vel[b] = vb;
                }
            }
        }

        if !params.allow_exit {
            for (idx, (p, v)) in pos.iter().zip(vel.iter_mut()).enumerate() {
                if !visible[idx] {
                    continue;
                }
                for i in 0..2 {
                    let next = p[i] + v[i] / params.fps;
                    if next < params.camera.min[i] || next > params.camera.max[i] {
                        v[i] = -v[i];
                    }
                }
            }
        }

        frames.push(
            (0..n)
                .map(|i| ObjectState {
                    object_id: i as u32,
                    inside_camera: visible[i],
                    position: pos[i],
                    velocity: vel[i],
                })
                .collect(),
        );
    }

    SceneAnnotation {
        scene_id: scene_id.into(),
        fps: params.fps,
        n_frames: params.n_frames,
        objects: specs,
        frames,
        collisions,
    }
}

/// Equal-mass impulse along the ground-plane line of centers,
/// restitution-scaled. Only approaching pairs exchange momentum. When the
/// centers have already passed each other within one frame, the line of
/// centers from the previous frame is used instead.
fn collide(prev: (Vec3, Vec3), cur: (Vec3, Vec3), va: Vec3, vb: Vec3, restitution: f64) -> (Vec3, Vec3) {
    let rel = sub(va, vb);
    let planar = |a: Vec3, b: Vec3| {
        let c = [b[0] - a[0], b[1] - a[1], 0.0];
        let d = norm(c);
        (d > 1e-12).then(|| scale(c, 1.0 / d))
    };
    let normal = [planar(cur.0, cur.1), planar(prev.0, prev.1)]
        .into_iter()
        .flatten()
        .find(|n| dot(rel, *n) > 0.0);
    let Some(normal) = normal else {
        return (va, vb);
    };
    let j = 0.5 * (1.0 + restitution) * dot(rel, normal);
    (sub(va, scale(normal, j)), add(vb, scale(normal, j)))
}

/// Generates a random scene from `config`; identical `(config, seed)` pairs
/// produce identical annotations.
pub fn simulate_scene(config: &SimConfig, seed: u64) -> Result<SceneAnnotation, SceneError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(config.n_objects[0]..=config.n_objects[1]) as usize;

    let combos: Vec<(Color, Material, Shape)> = Color::ALL
        .iter()
        .flat_map(|&c| {
            Material::ALL
                .iter()
                .flat_map(move |&m| Shape::ALL.iter().map(move |&s| (c, m, s)))
        })
        .collect();
    let picked = sample_indices(&mut rng, combos.len(), n).into_vec();

    let mut placed: Vec<InitialObject> = Vec::with_capacity(n);
    for (object_id, &combo_idx) in picked.iter().enumerate() {
        let (color, material, shape) = combos[combo_idx];
        let radius = uniform(&mut rng, config.radius);
        let spec = ObjectSpec {
            object_id: object_id as u32,
            shape,
            material,
            color,
            radius,
        };
        let mut candidate = None;
        for _ in 0..100 {
            let c = place_object(&mut rng, config, radius);
            let clear = placed
                .iter()
                .all(|o| dist(o.position, c.0) >= o.spec.radius + radius + 0.05);
            candidate = Some(c);
            if clear {
                break;
            }
        }
        let (position, velocity) = candidate.expect("at least one placement attempt");
        placed.push(InitialObject {
            spec,
            position,
            velocity,
        });
    }
    Ok(run_dynamics(
        format!("scene_{seed:06}"),
        placed,
        &Dynamics {
            n_frames: config.n_frames,
            fps: config.fps,
            camera: config.camera,
            restitution: config.restitution,
            allow_exit: config.allow_exit,
        },
    ))
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..=range[1])
    }
}

/// Picks a start position and velocity. Moving objects head toward a random
/// point in the central half of the camera box.
fn place_object(rng: &mut ChaCha8Rng, config: &SimConfig, radius: f64) -> (Vec3, Vec3) {
    let cam = &config.camera;
    let z = (cam.min[2] + radius).min(cam.max[2]);
    let center = [
        0.5 * (cam.min[0] + cam.max[0]),
        0.5 * (cam.min[1] + cam.max[1]),
    ];
    let half = [
        0.5 * (cam.max[0] - cam.min[0]),
        0.5 * (cam.max[1] - cam.min[1]),
    ];
    let target = [
        center[0] + rng.gen_range(-0.5..=0.5) * half[0],
        center[1] + rng.gen_range(-0.5..=0.5) * half[1],
    ];
    let can_enter = config.allow_entry && config.speed[1] > 0.0;
    let enters = can_enter && rng.gen_bool(config.entry_fraction);

    let position = if enters {
        let margin = rng.gen_range(0.2..=2.0);
        let along = rng.gen_range(-1.0..=1.0);
        match rng.gen_range(0..4) {
            0 => [cam.min[0] - margin, center[1] + along * half[1], z],
            1 => [cam.max[0] + margin, center[1] + along * half[1], z],
            2 => [center[0] + along * half[0], cam.min[1] - margin, z],
            _ => [center[0] + along * half[0], cam.max[1] + margin, z],
        }
    } else {
        [
            rng.gen_range(cam.min[0] + radius..=cam.max[0] - radius),
            rng.gen_range(cam.min[1] + radius..=cam.max[1] - radius),
            z,
        ]
    };

    let stationary = !enters && rng.gen_bool(config.stationary_fraction);
    let speed = if stationary {
        0.0
    } else {
        let lo = if enters { config.speed[0].max(1e-3) } else { config.speed[0] };
        uniform(rng, [lo, config.speed[1].max(lo)])
    };
    let dir = [target[0] - position[0], target[1] - position[1], 0.0];
    let len = norm(dir);
    let velocity = if speed == 0.0 || len < 1e-12 {
        [0.0; 3]
    } else {
        scale(dir, speed / len)
    };
    (position, velocity)
}

pub(crate) fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

impl fmt::Display for ObjectSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_name())
    }
}
