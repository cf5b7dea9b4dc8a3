#![allow(dead_code)]

use posebench_core::scheme::load_scheme;
use posebench_core::{ImageSize, KeypointScheme, PoseSequence};
use rand::Rng;

/// K keypoints, all in `body`, every landmark on keypoint 0.
pub fn flat_scheme(k: usize, dims: usize) -> KeypointScheme {
    load_scheme(&format!(
        r#"
        id = "flat{k}"
        total = {k}
        dims = {dims}
        [components]
        body = "0-{last}"
        [landmarks]
        left_shoulder = 0
        right_shoulder = 0
        left_elbow = 0
        right_elbow = 0
        left_wrist = 0
        right_wrist = 0
        "#,
        last = k - 1
    ))
    .unwrap()
}

/// Random sequence over `scheme` with roughly `p_missing` of records at c=0.
pub fn random_sequence<R: Rng>(
    scheme: &KeypointScheme,
    frames: usize,
    p_missing: f64,
    with_image: bool,
    rng: &mut R,
) -> PoseSequence {
    let k = scheme.total();
    let dims = scheme.dims();
    let coords = (0..frames * k * dims)
        .map(|_| rng.gen_range(-50.0..50.0))
        .collect();
    let conf = (0..frames * k)
        .map(|_| {
            if rng.gen_bool(p_missing) {
                0.0
            } else {
                rng.gen_range(0.01..=1.0)
            }
        })
        .collect();
    let image = with_image.then(|| ImageSize {
        width: rng.gen_range(100..2000),
        height: rng.gen_range(100..2000),
    });
    PoseSequence::new(scheme.id(), 25.0, image, dims, k, coords, conf).unwrap()
}
