use super::*;
use crate::curate::{validate, Verdict};
use crate::scene_sim::{
    brute_force_facts, run_dynamics, CameraBounds, CollisionEvent, Color, Dynamics, InitialObject, Material,
    ObjectSpec, ObjectState, Shape, Vec3,
};

fn spec(id: u32, radius: f64) -> ObjectSpec {
    ObjectSpec {
        object_id: id,
        shape: Shape::Sphere,
        material: Material::Rubber,
        color: [Color::Red, Color::Blue, Color::Green, Color::Yellow][id as usize],
        radius,
    }
}

/// Scene whose per-frame states come from `track(frame, object)`.
fn scene_from(
    n_frames: u32,
    radii: &[f64],
    track: impl Fn(u32, u32) -> (bool, Vec3, Vec3),
    collisions: Vec<CollisionEvent>,
) -> SceneAnnotation {
    let objects: Vec<ObjectSpec> = radii.iter().enumerate().map(|(i, &r)| spec(i as u32, r)).collect();
    let frames = (1..=n_frames)
        .map(|f| {
            (0..radii.len() as u32)
                .map(|o| {
                    let (inside_camera, position, velocity) = track(f, o);
                    ObjectState {
                        object_id: o,
                        inside_camera,
                        position,
                        velocity,
                    }
                })
                .collect()
        })
        .collect();
    SceneAnnotation {
        scene_id: "manual".into(),
        fps: 1.0,
        n_frames,
        objects,
        frames,
        collisions,
    }
}

fn parked(o: u32) -> Vec3 {
    [o as f64 * 3.0, 0.0, 0.5]
}

fn accepted(s: &CofSample, k: u32) {
    assert_eq!(validate(s, k as usize), Verdict::Accept, "{s:?}");
}

/// Objects 0/1 touch at frame 6, objects 1/2 at frame 14.
fn two_collision_scene() -> SceneAnnotation {
    scene_from(
        20,
        &[0.5, 0.5, 0.5],
        |f, o| {
            let mut p = parked(o);
            if f == 6 && o == 0 {
                p = [2.5, 0.0, 0.5];
            }
            if f == 14 && o == 2 {
                p = [3.5, 0.0, 0.5];
            }
            (true, p, [0.0; 3])
        },
        vec![CollisionEvent::new(6, 0, 1), CollisionEvent::new(14, 1, 2)],
    )
}

#[test]
fn collision_count_matches_facts() {
    let scene = two_collision_scene();
    let facts = brute_force_facts(&scene);
    assert_eq!(facts.collisions, vec![(6, 0, 1), (14, 1, 2)]);

    let s = gen_collision_count(&scene);
    assert_eq!(s.question, "How many collisions happen in this video?");
    assert_eq!(s.answer, format!("{} collisions happen in this video.", facts.collision_count()));
    assert_eq!(s.answer, "2 collisions happen in this video.");
    assert_eq!(s.frame_refs, vec![6, 14]);
    assert_eq!(
        s.reasoning[0],
        "A collision happens in Frame 6 between red rubber sphere and blue rubber sphere"
    );
    accepted(&s, 20);
}

#[test]
fn zero_collisions() {
    let scene = scene_from(5, &[0.5, 0.5], |_, o| (true, parked(o), [0.0; 3]), vec![]);
    let s = gen_collision_count(&scene);
    assert_eq!(s.answer, "0 collisions happen in this video.");
    assert!(s.frame_refs.is_empty());
    assert_eq!(s.reasoning, vec!["No collisions are observed in the video."]);
    accepted(&s, 5);
}

#[test]
fn simultaneous_collisions_share_a_frame() {
    let scene = scene_from(
        8,
        &[0.5; 4],
        |f, o| {
            let base = [(o / 2) as f64 * 10.0, 0.0, 0.5];
            let gap = if f == 5 { 0.8 } else { 3.0 };
            let p = [base[0] + (o % 2) as f64 * gap, 0.0, 0.5];
            (true, p, [0.0; 3])
        },
        vec![CollisionEvent::new(5, 0, 1), CollisionEvent::new(5, 2, 3)],
    );
    assert_eq!(brute_force_facts(&scene).collisions, vec![(5, 0, 1), (5, 2, 3)]);
    let s = gen_collision_count(&scene);
    assert_eq!(s.reasoning.len(), 2);
    assert!(s.reasoning.iter().all(|r| r.contains("Frame 5 ")));
    assert_eq!(s.frame_refs, vec![5]);
}

fn dynamics(n_frames: u32) -> Dynamics {
    Dynamics {
        n_frames,
        fps: 1.0,
        camera: CameraBounds {
            min: [-10.0, -10.0, 0.0],
            max: [10.0, 10.0, 3.0],
        },
        restitution: 1.0,
        allow_exit: true,
    }
}

#[test]
fn moving_count_cases() {
    let still = scene_from(4, &[0.5, 0.5], |_, o| (true, parked(o), [0.0; 3]), vec![]);
    let s = gen_moving_count(&still, DEFAULT_MOVING_EPSILON);
    assert_eq!(s.answer, "0 moving objects are in the video.");
    assert!(s.frame_refs.is_empty());

    let head_on = run_dynamics(
        "head_on",
        vec![
            InitialObject { spec: spec(0, 0.5), position: [-5.0, 0.0, 0.5], velocity: [1.0, 0.0, 0.0] },
            InitialObject { spec: spec(1, 0.5), position: [5.0, 0.0, 0.5], velocity: [-1.0, 0.0, 0.0] },
        ],
        &dynamics(10),
    );
    let s = gen_moving_count(&head_on, DEFAULT_MOVING_EPSILON);
    let oracle = brute_force_facts(&head_on).moving(DEFAULT_MOVING_EPSILON);
    assert_eq!(s.answer, format!("{} moving objects are in the video.", oracle.len()));
    assert_eq!(oracle.len(), 2);
    assert_eq!(s.frame_refs, vec![1]);

    let struck = run_dynamics(
        "struck",
        vec![
            InitialObject { spec: spec(0, 0.5), position: [-5.0, 0.0, 0.5], velocity: [1.0, 0.0, 0.0] },
            InitialObject { spec: spec(1, 0.5), position: [0.5, 0.0, 0.5], velocity: [0.0; 3] },
        ],
        &dynamics(10),
    );
    let s = gen_moving_count(&struck, DEFAULT_MOVING_EPSILON);
    let oracle = brute_force_facts(&struck).moving(DEFAULT_MOVING_EPSILON);
    assert_eq!(s.answer, "2 moving objects are in the video.");
    assert!(oracle[&1] >= 6);
    assert!(s.reasoning[1].starts_with("blue rubber sphere is moving in Frame "));
    assert_eq!(s.reasoning[1], format!("blue rubber sphere is moving in Frame {}", oracle[&1]));
}

#[test]
fn temporal_count_filters_by_entry() {
    let mut scene = two_collision_scene();
    let anchor_entry = 10;
    let mut objs = scene.objects.clone();
    objs.push(spec(3, 0.3));
    scene = scene_from(
        20,
        &[0.5, 0.5, 0.5, 0.3],
        |f, o| {
            if o == 3 {
                return (f >= anchor_entry, [20.0, 20.0, 0.3], [0.0; 3]);
            }
            let s = two_collision_scene();
            let st = s.state(f, o);
            (st.inside_camera, st.position, st.velocity)
        },
        scene.collisions.clone(),
    );
    assert_eq!(scene.objects, objs);

    let facts = brute_force_facts(&scene);
    let f0 = facts.entries[&3].unwrap();
    assert_eq!(f0, 10);
    let expected = facts.collisions.iter().filter(|c| c.0 >= f0).count();
    let s = gen_temporal_count(&scene, 3).unwrap();
    assert_eq!(expected, 1);
    assert_eq!(
        s.question,
        "After the yellow rubber sphere enters the scene, how many collisions happen?"
    );
    assert_eq!(s.answer, "1 collisions happen after the yellow rubber sphere enters the scene.");
    assert_eq!(s.frame_refs, vec![10, 14]);
    accepted(&s, 20);

    assert_eq!(gen_temporal_count(&scene, 0), Err(SynthSkip::NoEntryEvent(0)));
}

#[test]
fn temporal_count_without_later_collisions() {
    let scene = scene_from(10, &[0.5, 0.5], |f, o| (o == 0 || f >= 4, parked(o), [0.0; 3]), vec![]);
    let s = gen_temporal_count(&scene, 1).unwrap();
    assert_eq!(s.answer, "0 collisions happen after the blue rubber sphere enters the scene.");
    assert_eq!(s.frame_refs, vec![4]);
}

#[test]
fn appearance_order_sorted_by_first_visible() {
    let firsts = [3u32, 7, 1];
    let scene = scene_from(10, &[0.5; 3], |f, o| (f >= firsts[o as usize], parked(o), [0.0; 3]), vec![]);
    let s = gen_appearance_order(&scene, &[0, 1, 2]).unwrap();

    // oracle: sort query by first-visible frame from the facts scan
    let facts = brute_force_facts(&scene);
    let mut ids = vec![0u32, 1, 2];
    ids.sort_by_key(|id| facts.first_visible[id].unwrap());
    let expected: Vec<String> = ids.iter().map(|&i| scene.display_name(i)).collect();
    assert_eq!(s.answer, expected.join(", "));
    assert_eq!(s.answer, "green rubber sphere, red rubber sphere, blue rubber sphere");
    assert_eq!(
        s.question,
        "what is the appearance order of red rubber sphere, blue rubber sphere, green rubber sphere in the video?"
    );
    assert_eq!(s.reasoning[0], "red rubber sphere appears in Frame 3");
    assert_eq!(s.frame_refs, vec![1, 3, 7]);
    accepted(&s, 10);

    let pair = gen_appearance_order(&scene, &[2, 0]).unwrap();
    assert_eq!(pair.answer, "green rubber sphere, red rubber sphere");
}

#[test]
fn appearance_order_rejects_ties_and_bad_subsets() {
    let scene = scene_from(5, &[0.5; 3], |_, o| (true, parked(o), [0.0; 3]), vec![]);
    assert_eq!(gen_appearance_order(&scene, &[0, 1]), Err(SynthSkip::AmbiguousOrder(1)));
    assert_eq!(gen_appearance_order(&scene, &[0]), Err(SynthSkip::BadSubset(1)));
    assert_eq!(gen_appearance_order(&scene, &[0, 0]), Err(SynthSkip::BadSubset(2)));
}

/// Target (object 0) enters at frame 10 at the origin; the others sit at the
/// given centers, all radius 0.5.
fn distance_scene(neighbours: &[Vec3]) -> SceneAnnotation {
    let centers: Vec<Vec3> = std::iter::once([0.0, 0.0, 0.5]).chain(neighbours.iter().copied()).collect();
    scene_from(
        12,
        &vec![0.5; centers.len()],
        |f, o| (o != 0 || f >= 10, centers[o as usize], [0.0; 3]),
        vec![],
    )
}

#[test]
fn relative_distance_picks_nearest_surface() {
    let scene = distance_scene(&[[0.0, 6.9, 0.5], [3.17, 0.0, 0.5]]);
    let s = gen_relative_distance(&scene, 0, Action::Enters).unwrap();

    let facts = brute_force_facts(&scene);
    let f = facts.entries[&0].unwrap();
    let table: Vec<(u32, f64)> = facts
        .distances(f, 0)
        .into_iter()
        .map(|(o, d)| (o, (d - 1.0).max(0.0)))
        .collect();
    let nearest = table.iter().min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap().0;
    assert_eq!(s.answer, scene.display_name(nearest));
    assert_eq!(s.answer, "green rubber sphere");
    assert_eq!(s.frame_refs, vec![10]);
    assert_eq!(
        s.question,
        "Measuring from the closest point of each object, when red rubber sphere enters the scene, \
         which of these objects (blue rubber sphere, green rubber sphere) is closest to the red rubber sphere?"
    );
    assert_eq!(
        s.reasoning,
        vec![
            "The red rubber sphere enters the scene in Frame 10. In Frame 10, the distance between red rubber sphere and blue rubber sphere is 5.90.",
            "The red rubber sphere enters the scene in Frame 10. In Frame 10, the distance between red rubber sphere and green rubber sphere is 2.17.",
        ]
    );
    accepted(&s, 12);
}

#[test]
fn relative_distance_skips() {
    let tie = distance_scene(&[[3.0, 0.0, 0.5], [-3.0, 0.0, 0.5]]);
    assert_eq!(gen_relative_distance(&tie, 0, Action::Enters), Err(SynthSkip::DistanceTie));

    let rounded_tie = distance_scene(&[[3.171, 0.0, 0.5], [-3.174, 0.0, 0.5]]);
    assert_eq!(gen_relative_distance(&rounded_tie, 0, Action::Enters), Err(SynthSkip::DistanceTie));

    let lonely = distance_scene(&[[3.0, 0.0, 0.5]]);
    assert_eq!(gen_relative_distance(&lonely, 0, Action::Enters), Err(SynthSkip::TooFewNeighbors(1)));

    let scene = distance_scene(&[[0.0, 6.9, 0.5], [3.17, 0.0, 0.5]]);
    assert_eq!(
        gen_relative_distance(&scene, 0, Action::Exits),
        Err(SynthSkip::NoSuchEvent { object_id: 0, action: Action::Exits })
    );
}

#[test]
fn relative_distance_on_exit() {
    let scene = scene_from(
        8,
        &[0.5; 3],
        |f, o| (o != 0 || f <= 5, [o as f64 * 2.0 + (o == 2) as u8 as f64, 0.0, 0.5], [0.0; 3]),
        vec![],
    );
    let s = gen_relative_distance(&scene, 0, Action::Exits).unwrap();
    assert_eq!(s.frame_refs, vec![5]);
    assert!(s.question.contains("when red rubber sphere exits the scene"));
    assert_eq!(s.answer, "blue rubber sphere");
}

#[test]
fn batch_single_generator_and_determinism() {
    let scene = two_collision_scene();
    let one = synth_batch(
        std::slice::from_ref(&scene),
        &GenerationPlan::only(Category::ObjectCountCollision),
        1,
    );
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].sample_id, "manual:object_count_collision:0");

    let cfg = crate::scene_sim::SimConfig::default();
    let scenes: Vec<SceneAnnotation> = (0..12).map(|s| crate::scene_sim::simulate_scene(&cfg, s).unwrap()).collect();
    let a = synth_batch(&scenes, &GenerationPlan::default(), 42);
    let b = synth_batch(&scenes, &GenerationPlan::default(), 42);
    assert_eq!(a, b);
    let mut reversed = scenes.clone();
    reversed.reverse();
    assert_eq!(synth_batch(&reversed, &GenerationPlan::default(), 42), a);

    let ids: std::collections::HashSet<&str> = a.iter().map(|s| s.sample_id.as_str()).collect();
    assert_eq!(ids.len(), a.len());
    for s in &a {
        assert!(!s.question_has_frame_ref());
        assert_eq!(s.frame_refs, s.derived_refs());
    }
}
