//! CSV and JSON report emission.
//!
//! All CSV output uses `,` separators, `.` decimals, LF line endings and a
//! header row. Floats are printed with six significant digits in the style of
//! C's `%.6g`, so equal inputs always give byte-identical files.

use serde::Serialize;

use crate::container::{ImageSize, PoseSequence};
use crate::hands::HandPresenceReport;
use crate::occlusion::OcclusionCandidate;
use crate::preprocess::FeatureMatrix;
use crate::stability::{CorpusAggregate, Metric, StabilitySummary, REPORT_SCALE};

/// `%.6g` formatting: six significant digits, trailing zeros removed,
/// scientific notation below 1e-4 and from 1e6 up.
pub fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer");
    String::from_utf8(bytes).expect("CSV output is UTF-8")
}

/// Columns `region,metric,median,q1,q3,n`, values already scaled by 100.
pub fn stability_aggregates_csv(aggregates: &[CorpusAggregate]) -> String {
    let mut w = writer();
    w.write_record(["region", "metric", "median", "q1", "q3", "n"])
        .unwrap();
    for a in aggregates {
        w.write_record([
            a.region.as_str(),
            a.metric.as_str(),
            &fmt_sig6(a.stats.median),
            &fmt_sig6(a.stats.q1),
            &fmt_sig6(a.stats.q3),
            &a.stats.n.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

/// One row per (sequence, region). Metric columns carry the x100 scale in
/// their names; undefined metrics are empty cells.
pub fn stability_sequences_csv(rows: &[StabilitySummary]) -> String {
    let mut w = writer();
    w.write_record([
        "sequence_id",
        "region",
        "E_v_x100",
        "J_acc_x100",
        "J_jerk_x100",
    ])
    .unwrap();
    for r in rows {
        let cell = |m: Metric| {
            r.get(m)
                .map(|v| fmt_sig6(v * REPORT_SCALE))
                .unwrap_or_default()
        };
        w.write_record([
            r.sequence_id.as_str(),
            r.region.as_str(),
            &cell(Metric::Ev),
            &cell(Metric::Jacc),
            &cell(Metric::Jjerk),
        ])
        .unwrap();
    }
    finish(w)
}

/// Columns `estimator,hand,threshold,pct`; per estimator, rows for left,
/// right and both, thresholds ascending within each.
pub fn hands_csv(reports: &[(String, HandPresenceReport)]) -> String {
    let mut w = writer();
    w.write_record(["estimator", "hand", "threshold", "pct"])
        .unwrap();
    for (estimator, report) in reports {
        for (hand, pick) in [
            (
                "left",
                (|r: &crate::hands::MissingStats| r.pct_left) as fn(&_) -> f64,
            ),
            ("right", |r| r.pct_right),
            ("both", |r| r.pct_both),
        ] {
            for row in &report.rows {
                w.write_record([
                    estimator.as_str(),
                    hand,
                    &fmt_sig6(row.threshold),
                    &fmt_sig6(pick(row)),
                ])
                .unwrap();
            }
        }
    }
    finish(w)
}

#[derive(Serialize)]
struct EstimatorHands<'a> {
    estimator: &'a str,
    #[serde(flatten)]
    report: &'a HandPresenceReport,
}

pub fn hands_json(reports: &[(String, HandPresenceReport)]) -> String {
    let items: Vec<EstimatorHands<'_>> = reports
        .iter()
        .map(|(estimator, report)| EstimatorHands { estimator, report })
        .collect();
    let mut s = serde_json::to_string_pretty(&items).expect("serializable");
    s.push('\n');
    s
}

/// Columns `sequence_id,frame_index,kind,score`.
pub fn occlusion_csv(candidates: &[(String, Vec<OcclusionCandidate>)]) -> String {
    let mut w = writer();
    w.write_record(["sequence_id", "frame_index", "kind", "score"])
        .unwrap();
    for (id, list) in candidates {
        for c in list {
            w.write_record([
                id.as_str(),
                &c.frame_index.to_string(),
                c.kind.as_str(),
                &fmt_sig6(c.overlap_score),
            ])
            .unwrap();
        }
    }
    finish(w)
}

/// One row per frame; header names each column `k<index>_<axis>` with the
/// keypoint's index in the input scheme.
pub fn features_csv(m: &FeatureMatrix) -> String {
    let mut w = writer();
    let axes = ["x", "y", "z"];
    let header: Vec<String> = m
        .kept_indices
        .iter()
        .flat_map(|k| axes[..m.dims].iter().map(move |a| format!("k{k}_{a}")))
        .collect();
    w.write_record(&header).unwrap();
    for t in 0..m.rows {
        w.write_record(m.row(t).iter().map(|&v| fmt_sig6(v)))
            .unwrap();
    }
    finish(w)
}

#[derive(Serialize)]
struct FeatureMetadata<'a> {
    scheme_id: &'a str,
    kept_indices: &'a [usize],
    #[serde(rename = "D")]
    d: usize,
    dims: usize,
    frames: usize,
    fps: f32,
    image_size: Option<ImageSize>,
}

/// Sidecar metadata: the source header plus the feature layout.
pub fn features_metadata_json(m: &FeatureMatrix, source: &PoseSequence) -> String {
    let meta = FeatureMetadata {
        scheme_id: &m.scheme_id,
        kept_indices: &m.kept_indices,
        d: m.cols,
        dims: m.dims,
        frames: m.rows,
        fps: source.fps(),
        image_size: source.image_size(),
    };
    let mut s = serde_json::to_string_pretty(&meta).expect("serializable");
    s.push('\n');
    s
}
