use std::collections::BTreeSet;

use posebench_core::scheme::{builtin_descriptor, builtin_ids, Component, Region};
use posebench_core::{Landmark, SchemeRegistry, Side};

#[test]
fn estimator_totals() {
    let reg = SchemeRegistry::builtin();
    let expected = [
        ("mediapipe", 576, 3),
        ("openpose", 137, 2),
        ("mmpose", 133, 2),
        ("openpifpaf", 133, 2),
        ("sdpose", 133, 2),
        ("sapiens", 308, 2),
        ("alphapose", 136, 2),
        ("smplestx", 137, 2),
    ];
    for (estimator, total, dims) in expected {
        let s = reg.get(estimator).unwrap();
        assert_eq!((s.total(), s.dims()), (total, dims), "{estimator}");
    }
    assert!(!reg.get("smplestx").unwrap().has_confidence());
}

#[test]
fn partitions_and_landmarks() {
    let reg = SchemeRegistry::builtin();
    for s in reg.iter() {
        let all = s.region_indices(Region::AllExclLegs).unwrap();
        let legs = s.component(Component::Legs).unwrap_or(&[]);
        let feet = s.component(Component::Feet).unwrap_or(&[]);
        let mut union: Vec<usize> = all.iter().chain(legs).chain(feet).copied().collect();
        union.sort_unstable();
        assert_eq!(union, (0..s.total()).collect::<Vec<_>>(), "{}", s.id());

        let left = s.region_indices(Region::LeftHand).unwrap();
        let right = s.region_indices(Region::RightHand).unwrap();
        let hands = s.region_indices(Region::Hands).unwrap();
        assert_eq!(hands.len(), left.len() + right.len());
        assert_eq!(left.len(), 21, "{}", s.id());
        assert_eq!(right.len(), 21, "{}", s.id());

        let mut seen = BTreeSet::new();
        let mut sizes = 0;
        for (_, idx) in s.components() {
            sizes += idx.len();
            for &i in idx {
                assert!(i < s.total());
                assert!(seen.insert(i), "{}: index {i} in two components", s.id());
            }
        }
        assert!(sizes <= s.total());

        for landmark in [Landmark::Wrist, Landmark::Elbow, Landmark::Shoulder] {
            for side in Side::BOTH {
                assert!(s.landmark_index(landmark, side).unwrap() < s.total());
            }
        }
    }
}

#[test]
fn loading_is_deterministic() {
    for id in builtin_ids() {
        let a = SchemeRegistry::builtin().get(id).unwrap().clone();
        let b = SchemeRegistry::builtin().get(id).unwrap().clone();
        assert_eq!(a, b);
        assert!(builtin_descriptor(id).is_some());
    }
}

#[test]
fn custom_descriptor_and_duplicates() {
    let mut reg = SchemeRegistry::builtin();
    let text = builtin_descriptor("coco_wholebody").unwrap();
    assert!(reg.load(text).is_err());
    let renamed = text
        .replace("id = \"coco_wholebody\"", "id = \"coco_copy\"")
        .replace(
            "aliases = [\"mmpose\", \"mmpose_wholebody\", \"openpifpaf\", \"sdpose\"]",
            "",
        );
    let copy = reg.load(&renamed).unwrap().clone();
    assert_eq!(copy.total(), 133);
    assert_eq!(reg.get("coco_copy").unwrap(), &copy);
}
