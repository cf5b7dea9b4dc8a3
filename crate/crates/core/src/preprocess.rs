//! Translation-input preprocessing: leg removal, per-sequence normalization,
//! zero-fill of missing keypoints and frame flattening.
//!
//! [`run_pipeline`] applies the steps in the fixed order
//! drop legs -> normalize -> mask -> flatten.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::container::{ContainerError, PoseSequence};
use crate::scheme::{KeypointScheme, Landmark, SchemeError, Side};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error("NoValidShoulders: no frame has both shoulders detected")]
    NoValidShoulders,
    #[error(
        "UnmaskedMissing: frame {frame}, keypoint {keypoint} has c=0 but non-zero coordinates"
    )]
    UnmaskedMissing { frame: usize, keypoint: usize },
}

/// Flattened per-frame feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub scheme_id: String,
    /// Indices, in the input scheme, of the keypoints that made it into the
    /// rows.
    pub kept_indices: Vec<usize>,
    pub dims: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows x cols`.
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineOptions {
    pub drop_legs: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { drop_legs: true }
    }
}

/// Removes leg and foot keypoints. Returns the reduced sequence and the
/// matching scheme view, whose projection lists the kept input indices.
/// When nothing is removed the view keeps the input id, so a second
/// application is a no-op.
pub fn drop_legs(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
) -> Result<(PoseSequence, KeypointScheme), PreprocessError> {
    scheme.check_layout(seq.keypoints(), seq.dims())?;
    let legs = scheme.leg_indices();
    let kept: Vec<usize> = (0..scheme.total())
        .filter(|i| legs.binary_search(i).is_err())
        .collect();
    let id = if legs.is_empty() {
        scheme.id().to_string()
    } else {
        format!("{}-legless", scheme.id())
    };
    let view = scheme.subset(id.clone(), &kept);
    let out = seq.select_keypoints(id, &kept)?;
    Ok((out, view))
}

/// Mid-shoulder anchor and inter-shoulder scale over frames where both
/// shoulders are detected.
pub fn shoulder_frame(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
) -> Result<(Vec<f64>, f64), PreprocessError> {
    scheme.check_layout(seq.keypoints(), seq.dims())?;
    let left = scheme.landmark_index(Landmark::Shoulder, Side::Left)?;
    let right = scheme.landmark_index(Landmark::Shoulder, Side::Right)?;
    let dims = seq.dims();
    let mut centre = vec![0.0; dims];
    let mut width = 0.0;
    let mut n = 0usize;
    for f in 0..seq.frames() {
        if seq.conf(f, left) > 0.0 && seq.conf(f, right) > 0.0 {
            let (l, r) = (seq.point(f, left), seq.point(f, right));
            for d in 0..dims {
                centre[d] += 0.5 * (l[d] + r[d]);
            }
            width += l
                .iter()
                .zip(r)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            n += 1;
        }
    }
    if n == 0 {
        return Err(PreprocessError::NoValidShoulders);
    }
    let n = n as f64;
    centre.iter_mut().for_each(|c| *c /= n);
    let width = width / n;
    if width.is_nan() || width <= 0.0 {
        return Err(PreprocessError::NoValidShoulders);
    }
    Ok((centre, width))
}

/// Translates the mean mid-shoulder point to the origin and scales all axes
/// so the mean shoulder width is 1. Every keypoint is transformed, including
/// undetected ones; confidences are untouched.
pub fn normalize(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
) -> Result<PoseSequence, PreprocessError> {
    let (centre, width) = shoulder_frame(seq, scheme)?;
    let dims = seq.dims();
    let coords = seq
        .coords()
        .chunks_exact(dims)
        .flat_map(|p| p.iter().zip(&centre).map(|(v, c)| (v - c) / width))
        .collect();
    Ok(seq.with_coords(coords)?)
}

/// Sets the coordinates of every `c = 0` keypoint to exactly zero.
pub fn mask_zero_fill(seq: &PoseSequence) -> PoseSequence {
    let dims = seq.dims();
    let mut coords = seq.coords().to_vec();
    for (point, &c) in coords.chunks_exact_mut(dims).zip(seq.confidence()) {
        if c == 0.0 {
            point.fill(0.0);
        }
    }
    seq.with_coords(coords)
        .expect("zero-filling keeps the sequence valid")
}

/// One row per frame: keypoint coordinates in scheme order, x, y(, z) within
/// each keypoint.
pub fn flatten(seq: &PoseSequence) -> Result<FeatureMatrix, PreprocessError> {
    let dims = seq.dims();
    for f in 0..seq.frames() {
        for k in 0..seq.keypoints() {
            if seq.conf(f, k) == 0.0 && seq.point(f, k).iter().any(|&v| v != 0.0) {
                return Err(PreprocessError::UnmaskedMissing {
                    frame: f,
                    keypoint: k,
                });
            }
        }
    }
    Ok(FeatureMatrix {
        scheme_id: seq.scheme_id().to_string(),
        kept_indices: (0..seq.keypoints()).collect(),
        dims,
        rows: seq.frames(),
        cols: seq.keypoints() * dims,
        data: seq.coords().to_vec(),
    })
}

pub fn run_pipeline(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
) -> Result<FeatureMatrix, PreprocessError> {
    run_pipeline_with(seq, scheme, PipelineOptions::default())
}

pub fn run_pipeline_with(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
    options: PipelineOptions,
) -> Result<FeatureMatrix, PreprocessError> {
    scheme.check_layout(seq.keypoints(), seq.dims())?;
    let (reduced, view) = if options.drop_legs {
        drop_legs(seq, scheme)?
    } else {
        (seq.clone(), scheme.clone())
    };
    let kept = match view.projection() {
        Some(p) if options.drop_legs => p.indices.clone(),
        _ => (0..scheme.total()).collect(),
    };
    let normalized = normalize(&reduced, &view)?;
    let mut matrix = flatten(&mask_zero_fill(&normalized))?;
    matrix.scheme_id = scheme.id().to_string();
    matrix.kept_indices = kept;
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{load_scheme, SchemeRegistry};
    use crate::synth;
    use rand::SeedableRng;

    fn two_point_scheme() -> KeypointScheme {
        load_scheme(
            r#"
            id = "pair"
            total = 2
            dims = 2
            [landmarks]
            left_shoulder = 0
            right_shoulder = 1
            left_elbow = 0
            right_elbow = 1
            left_wrist = 0
            right_wrist = 1
            "#,
        )
        .unwrap()
    }

    #[test]
    fn shoulders_map_to_half_unit() {
        let s = two_point_scheme();
        let seq = PoseSequence::new(
            "pair",
            25.0,
            None,
            2,
            2,
            vec![0.0, 0.0, 2.0, 0.0],
            vec![1.0; 2],
        )
        .unwrap();
        let n = normalize(&seq, &s).unwrap();
        assert_eq!(n.coords(), &[-0.5, 0.0, 0.5, 0.0]);
        let back = normalize(&n, &s).unwrap();
        for (a, b) in back.coords().iter().zip(n.coords()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn undetected_shoulders_fail() {
        let s = two_point_scheme();
        let seq = PoseSequence::new(
            "pair",
            25.0,
            None,
            2,
            2,
            vec![0.0, 0.0, 2.0, 0.0],
            vec![1.0, 0.0],
        )
        .unwrap();
        assert!(matches!(
            normalize(&seq, &s),
            Err(PreprocessError::NoValidShoulders)
        ));
    }

    #[test]
    fn frames_without_shoulders_are_transformed_but_not_counted() {
        let s = two_point_scheme();
        let seq = PoseSequence::new(
            "pair",
            25.0,
            None,
            2,
            2,
            vec![0.0, 0.0, 2.0, 0.0, 100.0, 100.0, 500.0, 0.0],
            vec![1.0, 1.0, 0.0, 1.0],
        )
        .unwrap();
        let n = normalize(&seq, &s).unwrap();
        assert_eq!(n.point(1, 0), &[49.5, 50.0]);
    }

    #[test]
    fn drop_legs_coco() {
        let reg = SchemeRegistry::builtin();
        let coco = reg.get("coco_wholebody").unwrap();
        let seq = synth::still_sequence(coco, 3);
        let (once, view) = drop_legs(&seq, coco).unwrap();
        assert_eq!(once.keypoints(), 123);
        let kept = &view.projection().unwrap().indices;
        assert!(kept.iter().all(|i| !(13..=22).contains(i)));
        assert_eq!(once.point(2, 13), seq.point(2, 23));
        let (twice, view2) = drop_legs(&once, &view).unwrap();
        assert_eq!(twice, once);
        assert_eq!(view2.id(), view.id());
    }

    #[test]
    fn drop_legs_without_legs_is_identity() {
        let s = two_point_scheme();
        let seq = PoseSequence::new(
            "pair",
            25.0,
            None,
            2,
            2,
            vec![1.0, 2.0, 3.0, 4.0],
            vec![1.0; 2],
        )
        .unwrap();
        assert_eq!(drop_legs(&seq, &s).unwrap().0, seq);
    }

    #[test]
    fn mask_and_flatten() {
        let seq = PoseSequence::new(
            "pair",
            25.0,
            None,
            2,
            2,
            vec![1.0, 2.0, 3.0, 4.0],
            vec![1.0; 2],
        )
        .unwrap();
        assert_eq!(mask_zero_fill(&seq), seq);
        assert_eq!(flatten(&seq).unwrap().data, vec![1.0, 2.0, 3.0, 4.0]);

        let missing = PoseSequence::new(
            "pair",
            25.0,
            None,
            2,
            2,
            vec![5.2, 3.1, 3.0, 4.0],
            vec![0.0, 1.0],
        )
        .unwrap();
        assert!(matches!(
            flatten(&missing),
            Err(PreprocessError::UnmaskedMissing {
                frame: 0,
                keypoint: 0
            })
        ));
        let masked = mask_zero_fill(&missing);
        assert_eq!(masked.point(0, 0), &[0.0, 0.0]);
        assert_eq!(mask_zero_fill(&masked), masked);
        assert_eq!(flatten(&masked).unwrap().data, vec![0.0, 0.0, 3.0, 4.0]);
    }

    #[test]
    fn pipeline_dimensions() {
        let reg = SchemeRegistry::builtin();
        let coco = reg.get("coco_wholebody").unwrap();
        let m = run_pipeline(&synth::still_sequence(coco, 2), coco).unwrap();
        assert_eq!((m.rows, m.cols), (2, 246));
        assert_eq!(m.kept_indices.len(), 123);
        assert_eq!(m.scheme_id, "coco_wholebody");

        let mp = reg.get("mediapipe_holistic").unwrap();
        let seq = synth::still_sequence(mp, 2);
        let full = run_pipeline_with(&seq, mp, PipelineOptions { drop_legs: false }).unwrap();
        assert_eq!(full.cols, 1728);
        assert_eq!(full.kept_indices, (0..576).collect::<Vec<_>>());
    }

    #[test]
    fn pipeline_equals_manual_composition() {
        let reg = SchemeRegistry::builtin();
        let coco = reg.get("coco_wholebody").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let seq = synth::jittered_sequence(coco, 6, 3.0, &mut rng);
        let seq = synth::drop_hand(&seq, coco, Side::Left, &[1, 4]);
        let (a, view) = drop_legs(&seq, coco).unwrap();
        let manual = flatten(&mask_zero_fill(&normalize(&a, &view).unwrap())).unwrap();
        let piped = run_pipeline(&seq, coco).unwrap();
        assert_eq!(manual.data, piped.data);
        assert_eq!(piped, run_pipeline(&seq, coco).unwrap());

        // fully missing left hand: its block is zero
        let hand = view.component(crate::scheme::Component::LeftHand).unwrap();
        for &k in hand {
            assert_eq!(&piped.row(1)[k * 2..k * 2 + 2], &[0.0, 0.0]);
        }
    }
}
