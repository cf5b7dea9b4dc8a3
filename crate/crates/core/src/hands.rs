//! Missing-hand statistics from confidence channels.
//!
//! A hand is missing in a frame when the fraction of its keypoints with
//! `c = 0` reaches a threshold. Percentages are taken over signing frames:
//! frames where at least one hand has its wrist above its elbow. The same
//! denominator serves the left, right and both-hands columns.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::container::{Frame, PoseSequence};
use crate::scheme::{KeypointScheme, Landmark, SchemeError, Side};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HandError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("LandmarkMissing: {side} {landmark} has c=0")]
    LandmarkMissing { landmark: Landmark, side: Side },
    #[error("NoSigningFrames: no frame has a wrist above its elbow")]
    NoSigningFrames,
    #[error("threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("thresholds must be sorted ascending")]
    UnsortedThresholds,
}

/// Direction of the image y axis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YAxis {
    /// Image convention, y grows downward.
    #[default]
    Down,
    Up,
}

/// Thresholds 0.1, 0.2, ..., 1.0.
pub fn default_thresholds() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn missing_fraction(
    frame: &Frame<'_>,
    hand: Side,
    scheme: &KeypointScheme,
) -> Result<f64, HandError> {
    let indices = scheme
        .component(hand.hand())
        .filter(|v| !v.is_empty())
        .ok_or_else(|| SchemeError::MissingComponent {
            scheme: scheme.id().to_string(),
            component: hand.hand(),
        })?;
    let missing = indices.iter().filter(|&&i| frame.conf(i) == 0.0).count();
    Ok(missing as f64 / indices.len() as f64)
}

/// Whether `hand`'s wrist is vertically above its elbow.
pub fn is_signing_frame(
    frame: &Frame<'_>,
    hand: Side,
    scheme: &KeypointScheme,
    axis: YAxis,
) -> Result<bool, HandError> {
    let wrist = scheme.landmark_index(Landmark::Wrist, hand)?;
    let elbow = scheme.landmark_index(Landmark::Elbow, hand)?;
    for (index, landmark) in [(wrist, Landmark::Wrist), (elbow, Landmark::Elbow)] {
        if frame.conf(index) <= 0.0 {
            return Err(HandError::LandmarkMissing {
                landmark,
                side: hand,
            });
        }
    }
    let (wy, ey) = (frame.point(wrist)[1], frame.point(elbow)[1]);
    Ok(match axis {
        YAxis::Down => wy < ey,
        YAxis::Up => wy > ey,
    })
}

fn frame_is_signing(
    frame: &Frame<'_>,
    scheme: &KeypointScheme,
    axis: YAxis,
) -> Result<bool, HandError> {
    let mut signing = false;
    for side in Side::BOTH {
        match is_signing_frame(frame, side, scheme, axis) {
            Ok(s) => signing |= s,
            Err(HandError::LandmarkMissing { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(signing)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissingStats {
    pub threshold: f64,
    pub pct_left: f64,
    pub pct_right: f64,
    pub pct_both: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandPresenceReport {
    pub thresholds: Vec<f64>,
    pub rows: Vec<MissingStats>,
    pub n_signing_frames: usize,
    pub n_total_frames: usize,
}

/// Raw frame counts behind a sweep. Counts from several sequences add up, so
/// corpus percentages pool frames rather than averaging per-clip values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCounts {
    pub thresholds: Vec<f64>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub both: Vec<usize>,
    pub signing_frames: usize,
    pub total_frames: usize,
}

fn check_thresholds(thresholds: &[f64]) -> Result<(), HandError> {
    if let Some(&t) = thresholds.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
        return Err(HandError::InvalidThreshold(t));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(HandError::UnsortedThresholds);
    }
    Ok(())
}

impl SweepCounts {
    pub fn empty(thresholds: &[f64]) -> Result<Self, HandError> {
        check_thresholds(thresholds)?;
        let n = thresholds.len();
        Ok(Self {
            thresholds: thresholds.to_vec(),
            left: vec![0; n],
            right: vec![0; n],
            both: vec![0; n],
            signing_frames: 0,
            total_frames: 0,
        })
    }

    pub fn count(
        seq: &PoseSequence,
        scheme: &KeypointScheme,
        thresholds: &[f64],
        axis: YAxis,
    ) -> Result<Self, HandError> {
        scheme.check_layout(seq.keypoints(), seq.dims())?;
        let mut counts = Self::empty(thresholds)?;
        counts.total_frames = seq.frames();
        for frame in seq.iter_frames() {
            if !frame_is_signing(&frame, scheme, axis)? {
                continue;
            }
            counts.signing_frames += 1;
            let left = missing_fraction(&frame, Side::Left, scheme)?;
            let right = missing_fraction(&frame, Side::Right, scheme)?;
            for (i, &t) in thresholds.iter().enumerate() {
                let (l, r) = (left >= t, right >= t);
                counts.left[i] += usize::from(l);
                counts.right[i] += usize::from(r);
                counts.both[i] += usize::from(l && r);
            }
        }
        Ok(counts)
    }

    pub fn merge(&mut self, other: &SweepCounts) {
        assert_eq!(
            self.thresholds, other.thresholds,
            "merging sweeps over different thresholds"
        );
        for (a, b) in [
            (&mut self.left, &other.left),
            (&mut self.right, &other.right),
            (&mut self.both, &other.both),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.signing_frames += other.signing_frames;
        self.total_frames += other.total_frames;
    }

    pub fn report(&self) -> Result<HandPresenceReport, HandError> {
        if self.signing_frames == 0 {
            return Err(HandError::NoSigningFrames);
        }
        let denom = self.signing_frames as f64;
        let pct = |n: usize| 100.0 * n as f64 / denom;
        let rows: Vec<MissingStats> = self
            .thresholds
            .iter()
            .enumerate()
            .map(|(i, &threshold)| MissingStats {
                threshold,
                pct_left: pct(self.left[i]),
                pct_right: pct(self.right[i]),
                pct_both: pct(self.both[i]),
            })
            .collect();
        debug_assert!(rows.windows(2).all(|w| {
            w[1].pct_left <= w[0].pct_left
                && w[1].pct_right <= w[0].pct_right
                && w[1].pct_both <= w[0].pct_both
        }));
        debug_assert!(rows
            .iter()
            .all(|r| r.pct_both <= r.pct_left.min(r.pct_right)));
        Ok(HandPresenceReport {
            thresholds: self.thresholds.clone(),
            rows,
            n_signing_frames: self.signing_frames,
            n_total_frames: self.total_frames,
        })
    }
}

pub fn hand_missing_stats(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
    threshold: f64,
    axis: YAxis,
) -> Result<MissingStats, HandError> {
    let report = SweepCounts::count(seq, scheme, &[threshold], axis)?.report()?;
    Ok(report.rows[0])
}

pub fn threshold_sweep(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
    thresholds: &[f64],
    axis: YAxis,
) -> Result<HandPresenceReport, HandError> {
    SweepCounts::count(seq, scheme, thresholds, axis)?.report()
}
