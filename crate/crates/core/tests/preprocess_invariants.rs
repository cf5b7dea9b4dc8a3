use posebench_core::preprocess::{
    drop_legs, run_pipeline, run_pipeline_with, shoulder_frame, PipelineOptions, PreprocessError,
};
use posebench_core::{synth, PoseSequence, SchemeRegistry};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn transformed(seq: &PoseSequence, alpha: f64, shift: f64) -> PoseSequence {
    seq.with_coords(seq.coords().iter().map(|v| v * alpha + shift).collect())
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pipeline_ignores_scale_and_translation(
        seed in any::<u64>(),
        alpha in 0.2f64..8.0,
        shift in -500.0f64..500.0,
        estimator in prop::sample::select(vec!["coco_wholebody", "mediapipe", "openpose", "sapiens"]),
    ) {
        let reg = SchemeRegistry::builtin();
        let scheme = reg.get(estimator).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = synth::binary_dropout(&synth::jittered_sequence(scheme, 4, 5.0, &mut rng), scheme, 0.3, &mut rng);
        let base = run_pipeline(&seq, scheme).unwrap();
        let moved = run_pipeline(&transformed(&seq, alpha, shift), scheme).unwrap();
        for (a, b) in base.data.iter().zip(&moved.data) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn normalized_shoulder_width_is_one(seed in any::<u64>()) {
        let reg = SchemeRegistry::builtin();
        let scheme = reg.get("halpe_fullbody").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = synth::jittered_sequence(scheme, 6, 20.0, &mut rng);
        let (legless, view) = drop_legs(&seq, scheme).unwrap();
        let normalized = posebench_core::preprocess::normalize(&legless, &view).unwrap();
        let (centre, width) = shoulder_frame(&normalized, &view).unwrap();
        prop_assert!((width - 1.0).abs() <= 1e-9);
        prop_assert!(centre.iter().all(|c| c.abs() <= 1e-9));
    }

    #[test]
    fn zeros_sit_exactly_on_missing_slots(seed in any::<u64>()) {
        let reg = SchemeRegistry::builtin();
        let scheme = reg.get("coco_wholebody").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = synth::partial_dropout(&synth::jittered_sequence(scheme, 3, 4.0, &mut rng), scheme, &mut rng);
        let m = run_pipeline(&seq, scheme).unwrap();
        for t in 0..m.rows {
            for (col, &k) in m.kept_indices.iter().enumerate() {
                let slot = &m.row(t)[col * 2..col * 2 + 2];
                if seq.conf(t, k) == 0.0 {
                    prop_assert_eq!(slot, &[0.0, 0.0][..]);
                } else {
                    // jittered coordinates never land exactly on the anchor
                    prop_assert!(slot.iter().all(|&v| v != 0.0));
                }
            }
        }
    }
}

#[test]
fn feature_widths() {
    let reg = SchemeRegistry::builtin();
    let widths = [
        ("coco_wholebody", true, 246),
        ("mediapipe_holistic", false, 1728),
        ("halpe_fullbody", true, 126 * 2),
        ("openpose_137", true, 127 * 2),
    ];
    for (id, drop, d) in widths {
        let scheme = reg.get(id).unwrap();
        let seq = synth::still_sequence(scheme, 2);
        let m = run_pipeline_with(&seq, scheme, PipelineOptions { drop_legs: drop }).unwrap();
        assert_eq!(m.cols, d, "{id}");
        assert_eq!(m.cols, m.kept_indices.len() * scheme.dims());
    }
}

#[test]
fn shoulders_never_seen() {
    let reg = SchemeRegistry::builtin();
    let scheme = reg.get("coco_wholebody").unwrap();
    let seq = synth::still_sequence(scheme, 3);
    let seq = synth::zero_confidence(&seq, &vec![vec![5]; 3]);
    assert!(matches!(
        run_pipeline(&seq, scheme),
        Err(PreprocessError::NoValidShoulders)
    ));
}
