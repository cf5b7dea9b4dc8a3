//! Temporal stability of keypoint trajectories.
//!
//! Three per-sequence scalars, each the mean Euclidean norm of a forward
//! difference of the image-plane (x, y) trajectory, pooled over every valid
//! (joint, window) pair of a region:
//!
//! * `E_v`, first difference (motion energy),
//! * `J_acc`, second difference (acceleration jitter),
//! * `J_jerk`, third difference (jerk jitter).
//!
//! Coordinates are divided by the image diagonal when the sequence records
//! its image size. A window is valid only if every sample it touches has
//! `c > 0`. Corpus aggregates report median and quartiles scaled by 100.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::container::PoseSequence;
use crate::scheme::{KeypointScheme, Region, SchemeError};

/// Reported aggregates and per-sequence rows are multiplied by this.
pub const REPORT_SCALE: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("TooShort: {frames} frames, difference order {order} needs at least {}", order + 1)]
    TooShort { frames: usize, order: usize },
    #[error("difference order must be 1, 2 or 3, got {0}")]
    InvalidOrder(usize),
    #[error("NoValidWindows: every window touches an undetected keypoint")]
    NoValidWindows,
    #[error("EmptyInput: nothing to aggregate")]
    EmptyInput,
    #[error("sequence `{id}` uses scheme `{found}`, report scheme is `{expected}`")]
    SchemeMismatch {
        id: String,
        expected: String,
        found: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    /// Motion energy.
    Ev,
    /// Acceleration jitter.
    Jacc,
    /// Jerk jitter.
    Jjerk,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Ev, Metric::Jacc, Metric::Jjerk];

    pub fn order(self) -> usize {
        match self {
            Metric::Ev => 1,
            Metric::Jacc => 2,
            Metric::Jjerk => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Ev => "E_v",
            Metric::Jacc => "J_acc",
            Metric::Jjerk => "J_jerk",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_order(order: usize) -> Result<(), StabilityError> {
    if (1..=3).contains(&order) {
        Ok(())
    } else {
        Err(StabilityError::InvalidOrder(order))
    }
}

/// Difference of the given order over one window of `order + 1` samples,
/// evaluated as nested first differences so that constant (and exactly
/// representable linear or quadratic) input yields exact zeros.
fn window_difference(window: &[[f64; 2]]) -> [f64; 2] {
    let mut buf = [[0.0; 2]; 4];
    buf[..window.len()].copy_from_slice(window);
    for level in 1..window.len() {
        for i in 0..window.len() - level {
            buf[i] = [buf[i + 1][0] - buf[i][0], buf[i + 1][1] - buf[i][1]];
        }
    }
    buf[0]
}

/// Forward differences of a 2D trajectory; output length is `len - order`.
///
/// order 1: `p[t+1] - p[t]`, order 2: `p[t+2] - 2 p[t+1] + p[t]`,
/// order 3: `p[t+3] - 3 p[t+2] + 3 p[t+1] - p[t]`.
pub fn finite_difference(
    trajectory: &[[f64; 2]],
    order: usize,
) -> Result<Vec<[f64; 2]>, StabilityError> {
    check_order(order)?;
    if trajectory.len() < order + 1 {
        return Err(StabilityError::TooShort {
            frames: trajectory.len(),
            order,
        });
    }
    Ok(trajectory
        .windows(order + 1)
        .map(window_difference)
        .collect())
}

/// Raw metric value with the counts that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricOutcome {
    pub value: f64,
    pub valid_joints: usize,
    pub valid_windows: usize,
}

/// Computes one metric over a region, with counts.
pub fn metric_outcome(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
    region: Region,
    metric: Metric,
) -> Result<MetricOutcome, StabilityError> {
    scheme.check_layout(seq.keypoints(), seq.dims())?;
    let joints = scheme.region_indices(region)?;
    let order = metric.order();
    let frames = seq.frames();
    if frames < order + 1 {
        return Err(StabilityError::TooShort { frames, order });
    }
    check_order(order)?;
    let unit = seq.image_size().map_or(1.0, |s| s.diagonal());
    let mut window = [[0.0; 2]; 4];

    let mut sum = 0.0;
    let mut valid_windows = 0usize;
    let mut valid_joints = 0usize;
    for &j in &joints {
        let mut joint_windows = 0usize;
        for t in 0..frames - order {
            if (t..=t + order).any(|s| seq.conf(s, j) <= 0.0) {
                continue;
            }
            for (i, slot) in window[..=order].iter_mut().enumerate() {
                let p = seq.point(t + i, j);
                *slot = [p[0], p[1]];
            }
            let [dx, dy] = window_difference(&window[..=order]);
            sum += dx.hypot(dy) / unit;
            joint_windows += 1;
        }
        if joint_windows > 0 {
            valid_joints += 1;
            valid_windows += joint_windows;
        }
    }
    if valid_windows == 0 {
        return Err(StabilityError::NoValidWindows);
    }
    Ok(MetricOutcome {
        value: sum / valid_windows as f64,
        valid_joints,
        valid_windows,
    })
}

/// Unscaled metric value for one sequence and region.
pub fn sequence_metric(
    seq: &PoseSequence,
    scheme: &KeypointScheme,
    region: Region,
    metric: Metric,
) -> Result<f64, StabilityError> {
    metric_outcome(seq, scheme, region, metric).map(|o| o.value)
}

/// Per-sequence metrics for one region. A metric is `None` when the
/// sequence is too short for it or has no valid windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub sequence_id: String,
    pub region: Region,
    pub e_v: Option<MetricOutcome>,
    pub j_acc: Option<MetricOutcome>,
    pub j_jerk: Option<MetricOutcome>,
}

impl StabilitySummary {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Ev => self.e_v,
            Metric::Jacc => self.j_acc,
            Metric::Jjerk => self.j_jerk,
        }
        .map(|o| o.value)
    }
}

pub fn summarize(
    sequence_id: &str,
    seq: &PoseSequence,
    scheme: &KeypointScheme,
    region: Region,
) -> Result<StabilitySummary, StabilityError> {
    let mut outcomes = [None; 3];
    for (slot, metric) in outcomes.iter_mut().zip(Metric::ALL) {
        *slot = match metric_outcome(seq, scheme, region, metric) {
            Ok(o) => Some(o),
            Err(StabilityError::TooShort { .. } | StabilityError::NoValidWindows) => None,
            Err(e) => return Err(e),
        };
    }
    let [e_v, j_acc, j_jerk] = outcomes;
    Ok(StabilitySummary {
        sequence_id: sequence_id.to_string(),
        region,
        e_v,
        j_acc,
        j_jerk,
    })
}

/// Median and quartiles of per-sequence values, already multiplied by
/// [`REPORT_SCALE`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub n: usize,
    pub scale_applied: bool,
}

/// Linear interpolation between order statistics at position `p * (n - 1)`.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn aggregate(values: &[f64]) -> Result<Quartiles, StabilityError> {
    if values.is_empty() {
        return Err(StabilityError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Quartiles {
        median: quantile_sorted(&sorted, 0.5) * REPORT_SCALE,
        q1: quantile_sorted(&sorted, 0.25) * REPORT_SCALE,
        q3: quantile_sorted(&sorted, 0.75) * REPORT_SCALE,
        n: sorted.len(),
        scale_applied: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusAggregate {
    pub region: Region,
    pub metric: Metric,
    #[serde(flatten)]
    pub stats: Quartiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub aggregates: Vec<CorpusAggregate>,
    pub sequences: Vec<StabilitySummary>,
}

/// Runs every region over a corpus sharing one scheme. Aggregates come out
/// region-major in the order given, metrics in `E_v, J_acc, J_jerk` order; a
/// (region, metric) pair with no defined values is omitted.
pub fn stability_report(
    seqs: &[(String, PoseSequence)],
    scheme: &KeypointScheme,
    regions: &[Region],
) -> Result<StabilityReport, StabilityError> {
    let mut sequences = Vec::with_capacity(seqs.len() * regions.len());
    for &region in regions {
        for (id, seq) in seqs {
            if seq.scheme_id() != scheme.id() {
                return Err(StabilityError::SchemeMismatch {
                    id: id.clone(),
                    expected: scheme.id().to_string(),
                    found: seq.scheme_id().to_string(),
                });
            }
            sequences.push(summarize(id, seq, scheme, region)?);
        }
    }
    let mut aggregates = Vec::new();
    for &region in regions {
        for metric in Metric::ALL {
            let values: Vec<f64> = sequences
                .iter()
                .filter(|s| s.region == region)
                .filter_map(|s| s.get(metric))
                .collect();
            if values.is_empty() {
                continue;
            }
            aggregates.push(CorpusAggregate {
                region,
                metric,
                stats: aggregate(&values)?,
            });
        }
    }
    Ok(StabilityReport {
        aggregates,
        sequences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::load_scheme;

    fn line_scheme(k: usize) -> KeypointScheme {
        load_scheme(&format!(
            r#"
            id = "line"
            total = {k}
            dims = 2
            [components]
            body = "0-{}"
            [landmarks]
            left_shoulder = 0
            right_shoulder = 0
            left_elbow = 0
            right_elbow = 0
            left_wrist = 0
            right_wrist = 0
            "#,
            k - 1
        ))
        .unwrap()
    }

    fn single_joint(xs: &[(f64, f64)]) -> PoseSequence {
        let coords = xs.iter().flat_map(|&(x, y)| [x, y]).collect();
        PoseSequence::new("line", 25.0, None, 2, 1, coords, vec![1.0; xs.len()]).unwrap()
    }

    #[test]
    fn stencils() {
        let constant = vec![[3.0, -1.0]; 6];
        for order in 1..=3 {
            assert!(finite_difference(&constant, order)
                .unwrap()
                .iter()
                .all(|d| *d == [0.0, 0.0]));
        }
        let linear: Vec<[f64; 2]> = (0..6).map(|t| [t as f64, 2.0 * t as f64]).collect();
        assert!(finite_difference(&linear, 1)
            .unwrap()
            .iter()
            .all(|d| *d == [1.0, 2.0]));
        assert!(finite_difference(&linear, 2)
            .unwrap()
            .iter()
            .all(|d| *d == [0.0, 0.0]));
        let quad: Vec<[f64; 2]> = (0..6).map(|t| [(t * t) as f64, 0.0]).collect();
        assert!(finite_difference(&quad, 2)
            .unwrap()
            .iter()
            .all(|d| *d == [2.0, 0.0]));
        assert!(finite_difference(&quad, 3)
            .unwrap()
            .iter()
            .all(|d| *d == [0.0, 0.0]));
        assert_eq!(finite_difference(&quad, 3).unwrap().len(), 3);
        assert_eq!(
            finite_difference(&quad[..3], 3),
            Err(StabilityError::TooShort {
                frames: 3,
                order: 3
            })
        );
        assert_eq!(
            finite_difference(&quad, 4),
            Err(StabilityError::InvalidOrder(4))
        );
    }

    #[test]
    fn constant_velocity_energy() {
        let s = line_scheme(1);
        let xs: Vec<(f64, f64)> = (0..8).map(|t| (0.01 * t as f64, 0.0)).collect();
        let seq = single_joint(&xs);
        let ev = sequence_metric(&seq, &s, Region::Body, Metric::Ev).unwrap();
        assert!((ev - 0.01).abs() < 1e-15);
    }

    #[test]
    fn alternating_acceleration() {
        let s = line_scheme(1);
        let seq = single_joint(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(
            sequence_metric(&seq, &s, Region::Body, Metric::Jacc).unwrap(),
            2.0
        );
    }

    #[test]
    fn too_short_and_missing_windows() {
        let s = line_scheme(1);
        let seq = single_joint(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)]);
        assert!(matches!(
            sequence_metric(&seq, &s, Region::Body, Metric::Jjerk),
            Err(StabilityError::TooShort { .. })
        ));
        let dark = PoseSequence::new(
            "line",
            25.0,
            None,
            2,
            1,
            vec![0.0; 8],
            vec![1.0, 0.0, 1.0, 1.0],
        )
        .unwrap();
        // every order-2 window touches frame 1
        assert_eq!(
            sequence_metric(&dark, &s, Region::Body, Metric::Jacc),
            Err(StabilityError::NoValidWindows)
        );
        assert!(sequence_metric(&dark, &s, Region::Body, Metric::Ev).is_ok());
        let summary = summarize("d", &dark, &s, Region::Body).unwrap();
        assert!(summary.e_v.is_some() && summary.j_acc.is_none() && summary.j_jerk.is_none());
    }

    #[test]
    fn image_diagonal_normalization() {
        let s = line_scheme(1);
        let coords: Vec<f64> = (0..4)
            .flat_map(|t| [3.0 * t as f64, 4.0 * t as f64])
            .collect();
        let seq = PoseSequence::new(
            "line",
            25.0,
            Some(crate::container::ImageSize {
                width: 30,
                height: 40,
            }),
            2,
            1,
            coords,
            vec![1.0; 4],
        )
        .unwrap();
        let ev = sequence_metric(&seq, &s, Region::Body, Metric::Ev).unwrap();
        assert!((ev - 0.1).abs() < 1e-15);
    }

    #[test]
    fn aggregate_examples() {
        let q = aggregate(&[0.05, 0.01, 0.04, 0.02, 0.03]).unwrap();
        assert!((q.median - 3.0).abs() < 1e-12);
        assert!((q.q1 - 2.0).abs() < 1e-12);
        assert!((q.q3 - 4.0).abs() < 1e-12);
        assert!(q.scale_applied);
        let one = aggregate(&[0.0246]).unwrap();
        assert!((one.median - 2.46).abs() < 1e-12);
        assert_eq!((one.median, one.median), (one.q1, one.q3));
        assert_eq!(aggregate(&[]), Err(StabilityError::EmptyInput));
    }
}
