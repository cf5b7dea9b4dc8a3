use posebench_core::container::{read_pose, read_pose_from, write_pose, ContainerError};
use posebench_core::{ImageSize, PoseSequence, SchemeRegistry};
use proptest::prelude::*;

/// Sequences whose values survive the f32 narrowing on disk.
fn sequence() -> impl Strategy<Value = PoseSequence> {
    (
        "[a-z_]{0,12}",
        1.0f32..120.0,
        prop::option::of((1u16..4000, 1u16..4000)),
        2usize..=3,
        1usize..8,
        1usize..6,
    )
        .prop_flat_map(|(id, fps, size, dims, k, f)| {
            (
                Just((id, fps, size, dims, k)),
                prop::collection::vec(-1e4f32..1e4, f * k * dims),
                prop::collection::vec(prop_oneof![Just(0.0f32), 0.0f32..=1.0], f * k),
            )
        })
        .prop_map(|((id, fps, size, dims, k), coords, conf)| {
            PoseSequence::new(
                id,
                fps,
                size.map(|(width, height)| ImageSize { width, height }),
                dims,
                k,
                coords.into_iter().map(f64::from).collect(),
                conf.into_iter().map(f64::from).collect(),
            )
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn read_inverts_write(seq in sequence()) {
        let bytes = write_pose(&seq);
        let back = read_pose(&bytes).unwrap();
        prop_assert_eq!(&back, &seq);
        prop_assert_eq!(write_pose(&back), bytes);
    }

    #[test]
    fn every_strict_prefix_is_rejected(seq in sequence(), cut in 0.0f64..1.0) {
        let bytes = write_pose(&seq);
        let n = ((bytes.len() as f64) * cut) as usize;
        prop_assert!(read_pose(&bytes[..n]).is_err());
    }
}

#[test]
fn stream_reader_matches_slice_reader() {
    let reg = SchemeRegistry::builtin();
    let seq = posebench_core::synth::still_sequence(reg.get("openpose").unwrap(), 3);
    let bytes = write_pose(&seq);
    assert_eq!(
        read_pose_from(&bytes[..]).unwrap(),
        read_pose(&bytes).unwrap()
    );
}

#[test]
fn header_count_mismatch_is_malformed() {
    let reg = SchemeRegistry::builtin();
    let coco = reg.get("coco_wholebody").unwrap();
    let seq = posebench_core::synth::still_sequence(coco, 1);
    let mut bytes = write_pose(&seq);
    // rewrite K from 133 to 134 without touching the payload
    let k_at = bytes.len() - 133 * 12 - 2;
    assert_eq!(u16::from_le_bytes([bytes[k_at], bytes[k_at + 1]]), 133);
    bytes[k_at..k_at + 2].copy_from_slice(&134u16.to_le_bytes());
    let err = read_pose(&bytes).unwrap_err();
    assert!(
        matches!(err, ContainerError::MalformedPayload { .. }),
        "{err}"
    );
}

#[test]
fn confidence_out_of_range_is_malformed() {
    let seq = PoseSequence::new("x", 25.0, None, 2, 1, vec![0.0, 0.0], vec![1.0]).unwrap();
    let mut bytes = write_pose(&seq);
    let n = bytes.len();
    bytes[n - 4..].copy_from_slice(&1.5f32.to_le_bytes());
    assert!(matches!(
        read_pose(&bytes),
        Err(ContainerError::MalformedPayload { .. })
    ));
}
