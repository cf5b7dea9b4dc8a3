//! Candidate frames for manual occlusion review.
//!
//! Each frame's left hand, right hand and face get a tight axis-aligned box
//! over their detected keypoints; pairs whose boxes overlap with IoU at or
//! above a threshold become candidates.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::container::{Frame, PoseSequence};
use crate::scheme::{Component, KeypointScheme, SchemeError, Side};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.1;

/// Fewer detected keypoints than this and a component has no box.
pub const MIN_BOX_POINTS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OcclusionError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("IoU threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn area(&self) -> f64 {
        (self.max_x - self.min_x) * (self.max_y - self.min_y)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let w = self.max_x.min(other.max_x) - self.min_x.max(other.min_x);
        let h = self.max_y.min(other.max_y) - self.min_y.max(other.min_y);
        let inter = if w > 0.0 && h > 0.0 { w * h } else { 0.0 };
        let union = self.area() + other.area() - inter;
        if union > 0.0 {
            (inter / union).clamp(0.0, 1.0)
        } else if self == other {
            // degenerate (zero-area) boxes only match themselves
            1.0
        } else {
            0.0
        }
    }
}

pub fn component_bbox(frame: &Frame<'_>, indices: &[usize]) -> Option<BBox> {
    let mut visible = indices.iter().filter(|&&i| frame.conf(i) > 0.0).peekable();
    visible.peek()?;
    let mut n = 0;
    let mut b = BBox {
        min_x: f64::INFINITY,
        min_y: f64::INFINITY,
        max_x: f64::NEG_INFINITY,
        max_y: f64::NEG_INFINITY,
    };
    for &i in visible {
        let p = frame.point(i);
        b.min_x = b.min_x.min(p[0]);
        b.min_y = b.min_y.min(p[1]);
        b.max_x = b.max_x.max(p[0]);
        b.max_y = b.max_y.max(p[1]);
        n += 1;
    }
    (n >= MIN_BOX_POINTS).then_some(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OcclusionKind {
    HandHand,
    HandFace(Side),
}

impl OcclusionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OcclusionKind::HandHand => "hand-hand",
            OcclusionKind::HandFace(_) => "hand-face",
        }
    }
}

impl fmt::Display for OcclusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionCandidate {
    pub frame_index: usize,
    pub kind: OcclusionKind,
    pub overlap_score: f64,
}

/// Candidates sorted by frame, then score descending, then kind.
pub fn screen_occlusions(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
    iou_threshold: f64,
) -> Result<Vec<OcclusionCandidate>, OcclusionError> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(OcclusionError::InvalidThreshold(iou_threshold));
    }
    scheme.check_layout(seq.keypoints(), seq.dims())?;
    let part = |c: Component| {
        scheme
            .component(c)
            .ok_or_else(|| SchemeError::MissingComponent {
                scheme: scheme.id().to_string(),
                component: c,
            })
    };
    let left = part(Component::LeftHand)?;
    let right = part(Component::RightHand)?;
    let face = part(Component::Face)?;

    let mut out = Vec::new();
    for (f, frame) in seq.iter_frames().enumerate() {
        let lb = component_bbox(&frame, left);
        let rb = component_bbox(&frame, right);
        let fb = component_bbox(&frame, face);
        let pairs = [
            (OcclusionKind::HandHand, lb, rb),
            (OcclusionKind::HandFace(Side::Left), lb, fb),
            (OcclusionKind::HandFace(Side::Right), rb, fb),
        ];
        let mut found: Vec<OcclusionCandidate> = pairs
            .into_iter()
            .filter_map(|(kind, a, b)| {
                let score = a?.iou(&b?);
                (score >= iou_threshold).then_some(OcclusionCandidate {
                    frame_index: f,
                    kind,
                    overlap_score: score,
                })
            })
            .collect();
        found.sort_by(|a, b| {
            b.overlap_score
                .total_cmp(&a.overlap_score)
                .then(a.kind.cmp(&b.kind))
        });
        out.extend(found);
    }
    Ok(out)
}
