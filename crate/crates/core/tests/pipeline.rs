//! Integration coverage of the public library surface: the synthesis,
//! feature, classifier, and triage stages chained together the way a
//! downstream tool would use them.

use gait_triage::classifier::TrainConfig;
use gait_triage::dataset::labeled_examples;
use gait_triage::synth::SceneSpec;
use gait_triage::triage::read_manifest;
use gait_triage::{
    extract_features, melspectrogram_db, predict, synth_dataset, synth_scene, train,
    triage_dataset, GaitLabel, LabeledExample, SpectroParams, TriageParams,
};

fn scene_example(spec: &SceneSpec, id: &str) -> LabeledExample {
    let (clip, _, label) = synth_scene(spec).unwrap();
    let mel = melspectrogram_db(&clip, &SpectroParams::default()).unwrap();
    LabeledExample {
        id: id.to_string(),
        features: extract_features(&mel, 0.05).unwrap(),
        label,
    }
}

#[test]
fn in_memory_chain_separates_clean_from_noisy() {
    let mut examples = Vec::new();
    for seed in 0..12u64 {
        let good = seed % 2 == 0;
        let spec = SceneSpec {
            seed,
            snr_db: if good { 15.0 } else { -5.0 },
            distractors: if good { 0 } else { 4 },
            ..SceneSpec::default()
        };
        let expect = if good {
            GaitLabel::GoodGait
        } else {
            GaitLabel::BadGait
        };
        let ex = scene_example(&spec, &format!("s{seed}"));
        assert_eq!(ex.label, expect);
        examples.push(ex);
    }

    let cfg = TrainConfig {
        n_folds: 3,
        seed: 1,
        ..TrainConfig::default()
    };
    let model = train(&examples, &cfg).unwrap();
    for ex in &examples {
        let (label, score) = predict(&model, &ex.features).unwrap();
        assert_eq!(
            label, ex.label,
            "{} misclassified with score {score}",
            ex.id
        );
        assert!((0.0..=1.0).contains(&score));
    }
}

#[test]
fn disk_round_trip_filters_written_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let written = synth_dataset(dir.path(), 5, 5, 77).unwrap();

    let loaded = read_manifest(&dir.path().join("manifest.csv")).unwrap();
    assert_eq!(loaded, written);

    let params = TriageParams::default();
    let (rows, failures) =
        gait_triage::triage::extract_manifest_features(&loaded, dir.path(), &params).unwrap();
    assert!(failures.is_empty());
    assert_eq!(rows.len(), 30, "10 scenes x 3 windows each");

    let model = train(&labeled_examples(&rows), &TrainConfig::default()).unwrap();
    let (filtered, report) = triage_dataset(&loaded, dir.path(), &model, &params).unwrap();
    assert_eq!(
        report.gait_windows_kept + report.gait_windows_removed,
        report.gait_windows_in
    );
    assert_eq!(
        filtered.len(),
        report.gait_windows_kept + report.non_gait_kept
    );
    for entry in &filtered {
        let span = entry.end_s - entry.start_s;
        assert!(span > 0.0 && span <= 3.0 + 1e-9);
    }
}
