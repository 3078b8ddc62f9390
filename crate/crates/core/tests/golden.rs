use std::fs;
use std::path::PathBuf;

use cof_core::cof_real::{
    build_prompt, parse_generation, run_real_branch, to_cof_samples, Field, MalformedCompletion, RealGenConfig,
    ReplayClient, ReplayRecord, VideoAnnotation,
};
use cof_core::trace_eval::extract_frame_refs;

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn annotation() -> VideoAnnotation {
    serde_json::from_str(&fixture("annotation.json")).unwrap()
}

#[test]
fn prompt_matches_frozen_fixture() {
    let ann = annotation();
    ann.validate().unwrap();
    let prompt = build_prompt(&ann);
    assert_eq!(prompt, fixture("prompt.txt"));
    assert!(prompt.starts_with("Ask a question based on the narrative that is provided for a video."));
}

#[test]
fn prompt_frame_lines_within_budget() {
    let ann = annotation();
    let k = ann.n_frames();
    for line in build_prompt(&ann).lines().filter(|l| l.starts_with("Frame ")) {
        let id: u32 = line["Frame ".len()..line.find(':').unwrap()].parse().unwrap();
        assert!((1..=k).contains(&id), "{line}");
    }
}

#[test]
fn three_triplet_completion() {
    let parsed = parse_generation(&fixture("completion_three.txt"));
    assert!(parsed.rejects.is_empty());
    assert_eq!(parsed.triplets.len(), 3);
    assert_eq!(parsed.triplets[1].reasoning.len(), 3);
    assert_eq!(parsed.triplets[2].answer, "On a white plate.");

    let (samples, rejects) = to_cof_samples("espresso_00017", &parsed.triplets, 30);
    assert!(rejects.is_empty());
    let refs: Vec<Vec<u32>> = samples.iter().map(|s| s.frame_refs.clone()).collect();
    assert_eq!(refs, vec![vec![6, 14], vec![14, 21], vec![28]]);
    for s in &samples {
        let mut expected = extract_frame_refs(&s.reasoning.join("\n"));
        expected.sort_unstable();
        assert_eq!(s.frame_refs, expected);
    }
}

#[test]
fn damaged_completion_keeps_good_triplets() {
    let parsed = parse_generation(&fixture("completion_damaged.txt"));
    assert_eq!(parsed.triplets.len(), 2);
    assert_eq!(
        parsed.rejects,
        vec![MalformedCompletion::MissingMarker {
            index: 1,
            missing: Field::Reasoning
        }]
    );
}

#[test]
fn replay_branch_is_offline_and_deterministic() {
    let ann = annotation();
    let client = ReplayClient::from_records([ReplayRecord {
        key: ann.video_id.clone(),
        text: fixture("completion_damaged.txt"),
    }]);
    let a = run_real_branch(std::slice::from_ref(&ann), &client, &RealGenConfig::default());
    let b = run_real_branch(std::slice::from_ref(&ann), &client, &RealGenConfig::default());
    assert_eq!(a, b);
    assert_eq!(a.samples.len(), 2);
    assert_eq!(a.rejects.len(), 1);
    assert_eq!(a.rejects[0].reason, "missing_marker");
}
