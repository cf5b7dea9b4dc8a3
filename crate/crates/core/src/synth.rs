//! Synthetic pose clips for tests, demos and the acceptance harness.
//!
//! Every generated frame starts from a fixed template pose in which both
//! wrists sit above their elbows (y-down), so unperturbed frames count as
//! signing frames.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::container::{ImageSize, PoseSequence};
use crate::scheme::{Component, KeypointScheme, Landmark, Side};

pub const IMAGE: ImageSize = ImageSize {
    width: 640,
    height: 480,
};

/// Deterministic rest position for every keypoint of `scheme`.
pub fn template(scheme: &KeypointScheme) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(scheme.total() as u64);
    let mut points: Vec<[f64; 3]> = (0..scheme.total())
        .map(|_| {
            [
                rng.gen_range(200.0..440.0),
                rng.gen_range(100.0..400.0),
                rng.gen_range(-1.0..1.0),
            ]
        })
        .collect();
    let centre = |c: Component, x: f64, y: f64, points: &mut Vec<[f64; 3]>| {
        if let Some(idx) = scheme.component(c) {
            for (n, &i) in idx.iter().enumerate() {
                let a = n as f64 * 0.7;
                points[i] = [x + 15.0 * a.cos(), y + 15.0 * a.sin(), 0.0];
            }
        }
    };
    centre(Component::Face, 320.0, 110.0, &mut points);
    centre(Component::LeftHand, 400.0, 230.0, &mut points);
    centre(Component::RightHand, 240.0, 230.0, &mut points);
    let place = |l: Landmark, s: Side, p: [f64; 3], points: &mut Vec<[f64; 3]>| {
        if let Ok(i) = scheme.landmark_index(l, s) {
            points[i] = p;
        }
    };
    place(
        Landmark::Shoulder,
        Side::Left,
        [370.0, 200.0, 0.0],
        &mut points,
    );
    place(
        Landmark::Shoulder,
        Side::Right,
        [270.0, 200.0, 0.0],
        &mut points,
    );
    place(
        Landmark::Elbow,
        Side::Left,
        [390.0, 300.0, 0.0],
        &mut points,
    );
    place(
        Landmark::Elbow,
        Side::Right,
        [250.0, 300.0, 0.0],
        &mut points,
    );
    place(
        Landmark::Wrist,
        Side::Left,
        [400.0, 240.0, 0.0],
        &mut points,
    );
    place(
        Landmark::Wrist,
        Side::Right,
        [240.0, 240.0, 0.0],
        &mut points,
    );
    points
}

fn assemble(
    scheme: &KeypointScheme,
    frames: usize,
    mut point: impl FnMut(usize, usize) -> ([f64; 3], f64),
) -> PoseSequence {
    let dims = scheme.dims();
    let k = scheme.total();
    let mut coords = Vec::with_capacity(frames * k * dims);
    let mut conf = Vec::with_capacity(frames * k);
    for f in 0..frames {
        for j in 0..k {
            let (p, c) = point(f, j);
            coords.extend_from_slice(&p[..dims]);
            conf.push(c);
        }
    }
    PoseSequence::new(scheme.id(), 25.0, Some(IMAGE), dims, k, coords, conf)
        .expect("synthetic sequence is valid")
}

/// Motionless clip at the template pose, all confidences 1.
pub fn still_sequence(scheme: &KeypointScheme, frames: usize) -> PoseSequence {
    let rest = template(scheme);
    assemble(scheme, frames, |_, j| (rest[j], 1.0))
}

/// Template pose plus per-keypoint Gaussian-ish jitter of amplitude `noise`
/// pixels and a slow shared drift. Confidences lie in [0.3, 1].
pub fn jittered_sequence<R: Rng>(
    scheme: &KeypointScheme,
    frames: usize,
    noise: f64,
    rng: &mut R,
) -> PoseSequence {
    let rest = template(scheme);
    let drift: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    assemble(scheme, frames, |f, j| {
        let t = f as f64;
        let p = rest[j];
        let jitter = |rng: &mut R| (rng.gen::<f64>() + rng.gen::<f64>() - 1.0) * noise;
        (
            [
                p[0] + drift[0] * t + jitter(rng),
                p[1] + drift[1] * t + jitter(rng),
                p[2] + 0.01 * jitter(rng),
            ],
            rng.gen_range(0.3..=1.0),
        )
    })
}

/// Sets `c = 0` for every keypoint of `side`'s hand in the given frames.
pub fn drop_hand(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
    side: Side,
    frames: &[usize],
) -> PoseSequence {
    let hand = scheme.component(side.hand()).unwrap_or(&[]).to_vec();
    let per_frame: Vec<Vec<usize>> = (0..seq.frames())
        .map(|f| {
            if frames.contains(&f) {
                hand.clone()
            } else {
                Vec::new()
            }
        })
        .collect();
    zero_confidence(seq, &per_frame)
}

/// Sets `c = 0` for the listed keypoints of each frame.
pub fn zero_confidence(seq: &PoseSequence, per_frame: &[Vec<usize>]) -> PoseSequence {
    let k = seq.keypoints();
    let mut conf = seq.confidence().to_vec();
    for (f, indices) in per_frame.iter().enumerate() {
        for &i in indices {
            conf[f * k + i] = 0.0;
        }
    }
    PoseSequence::new(
        seq.scheme_id(),
        seq.fps(),
        seq.image_size(),
        seq.dims(),
        k,
        seq.coords().to_vec(),
        conf,
    )
    .expect("zeroing confidences keeps the sequence valid")
}

/// All-or-nothing hand loss: each hand is dropped entirely in a frame with
/// probability `p`, mimicking estimators that zero a whole hand at once.
pub fn binary_dropout<R: Rng>(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
    p: f64,
    rng: &mut R,
) -> PoseSequence {
    let per_frame: Vec<Vec<usize>> = (0..seq.frames())
        .map(|_| {
            Side::BOTH
                .iter()
                .filter(|_| rng.gen_bool(p))
                .flat_map(|s| scheme.component(s.hand()).unwrap_or(&[]).to_vec())
                .collect()
        })
        .collect();
    zero_confidence(seq, &per_frame)
}

/// Independent per-keypoint loss on hand keypoints, with a per-frame,
/// per-hand dropout rate drawn uniformly from [0, 1].
pub fn partial_dropout<R: Rng>(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
    rng: &mut R,
) -> PoseSequence {
    let per_frame: Vec<Vec<usize>> = (0..seq.frames())
        .map(|_| {
            let mut lost = Vec::new();
            for s in Side::BOTH {
                let rate: f64 = rng.gen();
                for &i in scheme.component(s.hand()).unwrap_or(&[]) {
                    if rng.gen_bool(rate) {
                        lost.push(i);
                    }
                }
            }
            lost
        })
        .collect();
    zero_confidence(seq, &per_frame)
}
