//! Frame ID alignment: map frames to timestamps, clip to the model's maximum
//! duration while keeping every annotated frame, downsample uniformly to a
//! frame budget, and re-index annotated frames to 1-based sampled positions.
//!
//! Frame `i` (1-based) sits at timestamp `(i - 1) / fps`; a video of `n`
//! frames spans `[0, n / fps)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cof_real::{Caption, VideoAnnotation};
use crate::scene_sim::{CollisionEvent, SceneAnnotation};

pub const DEFAULT_MAX_DURATION_S: f64 = 30.0;
pub const DEFAULT_FRAME_BUDGET: usize = 30;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceTimeline {
    pub n_frames: u32,
    pub fps: f64,
    /// Sorted 1-based original frame IDs carrying annotations.
    pub annotated_ids: Vec<u32>,
}

impl SourceTimeline {
    pub fn timestamp(&self, frame_id: u32) -> f64 {
        (frame_id - 1) as f64 / self.fps
    }

    pub fn duration(&self) -> f64 {
        self.n_frames as f64 / self.fps
    }

    pub fn validate(&self) -> Result<(), AlignError> {
        if self.n_frames == 0 || self.annotated_ids.is_empty() {
            return Err(AlignError::EmptyTimeline);
        }
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return Err(AlignError::InvalidTimeline(format!("fps {} is not positive", self.fps)));
        }
        if self.annotated_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AlignError::InvalidTimeline("annotated ids not strictly increasing".into()));
        }
        let (first, last) = (self.annotated_ids[0], *self.annotated_ids.last().unwrap());
        if first < 1 || last > self.n_frames {
            return Err(AlignError::InvalidTimeline(format!(
                "annotated ids must lie in [1, {}]",
                self.n_frames
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentMap {
    /// `(start_time_s, end_time_s)` of the clipped segment.
    pub window: (f64, f64),
    /// Original IDs of the retained frames; new ID = position + 1.
    pub sampled_original_ids: Vec<u32>,
    /// Annotated original ID → new 1-based ID.
    pub id_map: BTreeMap<u32, u32>,
}

impl AlignmentMap {
    /// Number of frames the model receives.
    pub fn k(&self) -> usize {
        self.sampled_original_ids.len()
    }

    pub fn window_len(&self) -> f64 {
        self.window.1 - self.window.0
    }

    pub fn new_id(&self, original: u32) -> Result<u32, AlignError> {
        self.id_map
            .get(&original)
            .copied()
            .ok_or(AlignError::UnmappedFrame(original))
    }

    fn is_identity_over(&self, n_frames: u32) -> bool {
        self.k() == n_frames as usize
            && self
                .sampled_original_ids
                .iter()
                .enumerate()
                .all(|(i, &id)| id as usize == i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlignError {
    #[error("annotated frames span {span_s:.3} s, more than the {max_s} s limit")]
    SpanExceeded { span_s: f64, max_s: f64 },
    #[error("timeline has no frames or no annotated frames")]
    EmptyTimeline,
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error("invalid alignment parameters: {0}")]
    InvalidParams(String),
    #[error("frame {0} has no entry in the alignment map")]
    UnmappedFrame(u32),
}

impl AlignError {
    /// Short machine-readable reason, used in dropped-sample reports.
    pub fn reason(&self) -> &'static str {
        match self {
            AlignError::SpanExceeded { .. } => "span_exceeded",
            AlignError::EmptyTimeline => "empty_timeline",
            AlignError::InvalidTimeline(_) => "invalid_timeline",
            AlignError::InvalidParams(_) => "invalid_params",
            AlignError::UnmappedFrame(_) => "unmapped_frame",
        }
    }
}

/// Nearest integer, halves rounding down.
fn round_half_down(x: f64) -> i64 {
    (x - 0.5 - EPS).ceil() as i64
}

pub fn build_alignment(
    timeline: &SourceTimeline,
    max_duration_s: f64,
    frame_budget: usize,
) -> Result<AlignmentMap, AlignError> {
    timeline.validate()?;
    if !(max_duration_s > 0.0) || !max_duration_s.is_finite() {
        return Err(AlignError::InvalidParams("max duration must be positive".into()));
    }
    if frame_budget < 2 {
        return Err(AlignError::InvalidParams("frame budget must be at least 2".into()));
    }
    let fps = timeline.fps;
    let first = timeline.annotated_ids[0];
    let last = *timeline.annotated_ids.last().unwrap();
    let span_s = (last - first) as f64 / fps;
    if span_s > max_duration_s {
        return Err(AlignError::SpanExceeded {
            span_s,
            max_s: max_duration_s,
        });
    }

    let duration = timeline.duration();
    let window = if duration <= max_duration_s + EPS {
        (0.0, duration.min(max_duration_s))
    } else {
        let start = timeline.timestamp(first);
        let end = start + max_duration_s;
        if end > duration {
            (duration - max_duration_s, duration)
        } else {
            (start, end)
        }
    };

    // frames whose timestamps fall in [start, end)
    let n = timeline.n_frames as i64;
    let first_in = ((window.0 * fps - EPS).ceil() as i64 + 1).clamp(1, n);
    let last_in = ((window.1 * fps - EPS).ceil() as i64).clamp(first_in, n);
    let n_in = (last_in - first_in + 1) as usize;

    let sampled: Vec<u32> = if n_in <= frame_budget {
        (first_in..=last_in).map(|i| i as u32).collect()
    } else {
        let step = (window.1 - window.0) / frame_budget as f64;
        let mut ids: Vec<u32> = Vec::with_capacity(frame_budget);
        for j in 0..frame_budget {
            let t = window.0 + j as f64 * step;
            let id = round_half_down(t * fps + 1.0).clamp(first_in, last_in) as u32;
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
        ids
    };

    let id_map = timeline
        .annotated_ids
        .iter()
        .map(|&a| (a, nearest_position(&sampled, a) as u32 + 1))
        .collect();

    Ok(AlignmentMap {
        window,
        sampled_original_ids: sampled,
        id_map,
    })
}

/// Index of the sampled frame nearest to `id`; ties go to the earlier frame.
/// All timestamps share one fps, so frame-index distance orders time distance.
fn nearest_position(sampled: &[u32], id: u32) -> usize {
    match sampled.binary_search(&id) {
        Ok(pos) => pos,
        Err(0) => 0,
        Err(pos) if pos == sampled.len() => pos - 1,
        Err(pos) => {
            let (lo, hi) = (sampled[pos - 1], sampled[pos]);
            if id - lo <= hi - id {
                pos - 1
            } else {
                pos
            }
        }
    }
}

/// Annotations whose frame IDs can be re-indexed through an [`AlignmentMap`].
pub trait Remap: Sized {
    fn timeline(&self) -> SourceTimeline;

    /// Re-indexes every frame reference. Entries collapsing onto the same
    /// new ID are merged in their original order.
    fn remap(&self, map: &AlignmentMap) -> Result<Self, AlignError>;

    fn align(&self, max_duration_s: f64, frame_budget: usize) -> Result<(Self, AlignmentMap), AlignError> {
        let map = build_alignment(&self.timeline(), max_duration_s, frame_budget)?;
        Ok((self.remap(&map)?, map))
    }
}

pub fn remap_annotations<T: Remap>(annotations: &T, map: &AlignmentMap) -> Result<T, AlignError> {
    annotations.remap(map)
}

impl Remap for VideoAnnotation {
    fn timeline(&self) -> SourceTimeline {
        SourceTimeline {
            n_frames: self.n_frames(),
            fps: self.fps,
            annotated_ids: self.captions.iter().map(|c| c.frame_id).collect(),
        }
    }

    fn remap(&self, map: &AlignmentMap) -> Result<Self, AlignError> {
        let mut captions: Vec<Caption> = Vec::with_capacity(self.captions.len());
        for c in &self.captions {
            let id = map.new_id(c.frame_id)?;
            match captions.last_mut() {
                Some(prev) if prev.frame_id == id => {
                    prev.caption.push(' ');
                    prev.caption.push_str(&c.caption);
                }
                _ => captions.push(Caption {
                    frame_id: id,
                    caption: c.caption.clone(),
                }),
            }
        }
        let (duration_s, fps) = if map.is_identity_over(self.n_frames()) {
            (self.duration_s, self.fps)
        } else {
            (map.window_len(), map.k() as f64 / map.window_len())
        };
        Ok(VideoAnnotation {
            video_id: self.video_id.clone(),
            duration_s,
            fps,
            captions,
        })
    }
}

impl Remap for SceneAnnotation {
    fn timeline(&self) -> SourceTimeline {
        SourceTimeline {
            n_frames: self.n_frames,
            fps: self.fps,
            annotated_ids: (1..=self.n_frames).collect(),
        }
    }

    fn remap(&self, map: &AlignmentMap) -> Result<Self, AlignError> {
        if map.is_identity_over(self.n_frames) {
            for id in 1..=self.n_frames {
                if map.new_id(id)? != id {
                    return Err(AlignError::InvalidParams("identity sampling with a non-identity map".into()));
                }
            }
            return Ok(self.clone());
        }
        let mut frames = Vec::with_capacity(map.k());
        for &orig in &map.sampled_original_ids {
            let states = self
                .frames
                .get(orig as usize - 1)
                .ok_or(AlignError::UnmappedFrame(orig))?;
            frames.push(states.clone());
        }
        let mut collisions: Vec<CollisionEvent> = Vec::with_capacity(self.collisions.len());
        for ev in &self.collisions {
            let moved = CollisionEvent {
                frame_id: map.new_id(ev.frame_id)?,
                pair: ev.pair,
            };
            if !collisions.contains(&moved) {
                collisions.push(moved);
            }
        }
        collisions.sort_by_key(|c| c.frame_id);
        Ok(SceneAnnotation {
            scene_id: self.scene_id.clone(),
            fps: map.k() as f64 / map.window_len(),
            n_frames: map.k() as u32,
            objects: self.objects.clone(),
            frames,
            collisions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn timeline(n_frames: u32, fps: f64, annotated: &[u32]) -> SourceTimeline {
        SourceTimeline {
            n_frames,
            fps,
            annotated_ids: annotated.to_vec(),
        }
    }

    #[test]
    fn short_video_maps_to_identity() {
        let map = build_alignment(&timeline(60, 2.0, &[5, 20, 50]), 30.0, 60).unwrap();
        assert_eq!(map.window, (0.0, 30.0));
        assert_eq!(map.k(), 60);
        for a in [5, 20, 50] {
            assert_eq!(map.id_map[&a], a);
        }
    }

    #[test]
    fn long_video_anchors_window_at_first_caption() {
        let tl = timeline(1800, 30.0, &[300, 900]);
        let map = build_alignment(&tl, 30.0, 30).unwrap();
        assert!((map.window.0 - 299.0 / 30.0).abs() < 1e-12);
        assert!((map.window_len() - 30.0).abs() < 1e-9);

        // oracle: 30 timestamps one second apart, nearest frame, ties earlier
        let oracle: Vec<u32> = (0..30)
            .map(|j| {
                let t = 299.0 / 30.0 + j as f64;
                (1..=1800u32)
                    .min_by(|&a, &b| {
                        let da = (tl.timestamp(a) - t).abs();
                        let db = (tl.timestamp(b) - t).abs();
                        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
                    })
                    .unwrap()
            })
            .collect();
        assert_eq!(map.sampled_original_ids, oracle);
        assert_eq!(&map.sampled_original_ids[..3], &[300, 330, 360]);
        assert_eq!(map.id_map[&300], 1);
        assert_eq!(map.id_map[&900], 21);
    }

    #[test]
    fn window_shifts_left_at_video_end() {
        let tl = timeline(1800, 30.0, &[1500, 1790]);
        let map = build_alignment(&tl, 30.0, 30).unwrap();
        assert!((map.window.1 - 60.0).abs() < 1e-12);
        assert!((map.window.0 - 30.0).abs() < 1e-12);
        assert!(map.id_map.values().all(|&v| (1..=30).contains(&v)));
    }

    #[test]
    fn span_over_limit_is_rejected() {
        // annotated frames 45 s apart
        let err = build_alignment(&timeline(3000, 30.0, &[30, 1380]), 30.0, 30).unwrap_err();
        assert!(matches!(err, AlignError::SpanExceeded { .. }));
        assert_eq!(err.reason(), "span_exceeded");
    }

    #[test]
    fn bad_inputs() {
        assert_eq!(
            build_alignment(&timeline(10, 1.0, &[]), 30.0, 30),
            Err(AlignError::EmptyTimeline)
        );
        assert!(matches!(
            build_alignment(&timeline(10, 1.0, &[3, 3]), 30.0, 30),
            Err(AlignError::InvalidTimeline(_))
        ));
        assert!(matches!(
            build_alignment(&timeline(10, 1.0, &[11]), 30.0, 30),
            Err(AlignError::InvalidTimeline(_))
        ));
        assert!(matches!(
            build_alignment(&timeline(10, 1.0, &[1]), 30.0, 1),
            Err(AlignError::InvalidParams(_))
        ));
    }

    fn video(captions: &[(u32, &str)], duration_s: f64, fps: f64) -> VideoAnnotation {
        VideoAnnotation {
            video_id: "v".into(),
            duration_s,
            fps,
            captions: captions
                .iter()
                .map(|&(frame_id, c)| Caption {
                    frame_id,
                    caption: c.into(),
                })
                .collect(),
        }
    }

    #[test]
    fn identity_remap_is_noop() {
        let v = video(&[(2, "a"), (9, "b")], 10.0, 1.0);
        let (out, map) = v.align(30.0, 30).unwrap();
        assert_eq!(map.k(), 10);
        assert_eq!(out, v);
    }

    #[test]
    fn captions_follow_alignment() {
        let v = video(&[(300, "first"), (900, "second")], 60.0, 30.0);
        let (out, map) = v.align(30.0, 30).unwrap();
        let ids: Vec<u32> = out.captions.iter().map(|c| c.frame_id).collect();
        assert_eq!(ids, vec![1, 21]);
        assert_eq!(out.n_frames(), map.k() as u32);
    }

    #[test]
    fn collapsing_captions_merge_in_order() {
        // 0.1 s apart at fps 10, sampled once per second
        let v = video(&[(101, "a cat jumps"), (102, "it lands")], 60.0, 10.0);
        let (out, _) = v.align(30.0, 30).unwrap();
        assert_eq!(out.captions.len(), 1);
        assert_eq!(out.captions[0].frame_id, 1);
        assert_eq!(out.captions[0].caption, "a cat jumps it lands");
    }

    #[test]
    fn unmapped_frame_is_an_error() {
        let v = video(&[(2, "a")], 10.0, 1.0);
        let mut map = build_alignment(&v.timeline(), 30.0, 30).unwrap();
        map.id_map.clear();
        assert_eq!(v.remap(&map), Err(AlignError::UnmappedFrame(2)));
    }

    #[test]
    fn scene_downsampling_keeps_object_states() {
        use crate::scene_sim::{simulate_scene, SimConfig};
        let scene = simulate_scene(&SimConfig::default(), 11).unwrap();
        let (aligned, map) = scene.align(30.0, 30).unwrap();
        assert_eq!(aligned.n_frames, 30);
        assert_eq!(aligned.frames.len(), 30);
        for (k, &orig) in map.sampled_original_ids.iter().enumerate() {
            assert_eq!(aligned.frames[k], scene.frames[orig as usize - 1]);
        }
        assert!(aligned.collisions.iter().all(|c| (1..=30).contains(&c.frame_id)));
        assert!(aligned.collisions.windows(2).all(|w| w[0].frame_id <= w[1].frame_id));
    }

    fn arb_timeline() -> impl Strategy<Value = (SourceTimeline, f64, usize)> {
        (1u32..4000, prop_oneof![Just(1.0), Just(2.0), Just(24.0), Just(25.0), Just(29.97), Just(30.0), 0.5f64..120.0])
            .prop_flat_map(|(n, fps)| {
                (
                    Just(n),
                    Just(fps),
                    prop::collection::btree_set(1..=n, 1..12),
                    1.0f64..90.0,
                    2usize..80,
                )
            })
            .prop_map(|(n, fps, ids, max, budget)| (timeline(n, fps, &ids.into_iter().collect::<Vec<_>>()), max, budget))
    }

    proptest! {
        #[test]
        fn alignment_invariants((tl, max, budget) in arb_timeline()) {
            let first = tl.annotated_ids[0];
            let last = *tl.annotated_ids.last().unwrap();
            let span = (last - first) as f64 / tl.fps;
            match build_alignment(&tl, max, budget) {
                Err(AlignError::SpanExceeded { .. }) => prop_assert!(span > max),
                Err(e) => prop_assert!(false, "unexpected {e}"),
                Ok(map) => {
                    prop_assert!(span <= max);
                    prop_assert!(map.window_len() <= max + 1e-9);
                    prop_assert!(tl.timestamp(first) >= map.window.0 - 1e-9);
                    prop_assert!(tl.timestamp(last) <= map.window.1 + 1e-9);
                    prop_assert!(map.k() <= budget && map.k() >= 1);
                    let n_in = (1..=tl.n_frames)
                        .filter(|&i| {
                            let t = tl.timestamp(i);
                            t >= map.window.0 - 1e-9 && t < map.window.1 - 1e-9
                        })
                        .count();
                    if n_in >= budget {
                        prop_assert_eq!(map.k(), budget);
                    }
                    prop_assert!(map.sampled_original_ids.windows(2).all(|w| w[0] < w[1]));
                    let ids: Vec<u32> = tl.annotated_ids.iter().map(|a| map.id_map[a]).collect();
                    prop_assert!(ids.windows(2).all(|w| w[0] <= w[1]));
                    prop_assert!(ids.iter().all(|&v| v >= 1 && v as usize <= map.k()));
                }
            }
        }

        #[test]
        fn aligning_aligned_timeline_is_identity(k in 2u32..60, len in 1.0f64..30.0, pick in prop::collection::vec(any::<bool>(), 60)) {
            let annotated: Vec<u32> = (1..=k).filter(|&i| pick[i as usize - 1]).collect();
            prop_assume!(!annotated.is_empty());
            let tl = timeline(k, k as f64 / len, &annotated);
            let map = build_alignment(&tl, 30.0, k as usize).unwrap();
            prop_assert_eq!(map.k(), k as usize);
            for a in &annotated {
                prop_assert_eq!(map.id_map[a], *a);
            }
        }
    }
}
