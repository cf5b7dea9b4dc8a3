//! Pose sequences and the SPC1 container.
//!
//! SPC1 byte layout, all integers and floats little-endian:
//!
//! | field        | type                         |
//! |--------------|------------------------------|
//! | magic        | `b"SPC1"`                    |
//! | version      | u16 = 1                      |
//! | scheme id    | u8 length + UTF-8 bytes      |
//! | fps          | f32                          |
//! | flags        | u8 (bit0 image size, bit1 3D)|
//! | width/height | u16, u16 (only if bit0)      |
//! | frames F     | u32                          |
//! | keypoints K  | u16                          |
//! | payload      | F x K x (dims x f32 + f32 c) |
//!
//! Records are frame-major, keypoints in scheme order, coordinates before the
//! confidence. Values are widened to f64 in memory.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scheme::KeypointScheme;

pub const MAGIC: &[u8; 4] = b"SPC1";
pub const VERSION: u16 = 1;

const FLAG_IMAGE_SIZE: u8 = 0b01;
const FLAG_3D: u8 = 0b10;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic {found:?} (expected \"SPC1\")")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated stream at byte offset {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("MalformedPayload at byte offset {offset}: {reason}")]
    MalformedPayload { offset: usize, reason: String },
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("frame {frame}: expected {expected} keypoints, found {found}")]
    CountMismatch {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error("frame {frame}, keypoint {keypoint}: {reason}")]
    BadRecord {
        frame: usize,
        keypoint: usize,
        reason: String,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u16,
    pub height: u16,
}

impl ImageSize {
    pub fn diagonal(&self) -> f64 {
        f64::from(self.width).hypot(f64::from(self.height))
    }
}

/// F frames of K keypoint records for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    scheme_id: String,
    fps: f32,
    image_size: Option<ImageSize>,
    dims: usize,
    keypoints: usize,
    frames: usize,
    coords: Vec<f64>,
    confidence: Vec<f64>,
}

/// Borrowed view of one frame.
#[derive(Debug, Clone, Copy)]
pub struct Frame<'a> {
    pub coords: &'a [f64],
    pub confidence: &'a [f64],
    pub dims: usize,
}

impl<'a> Frame<'a> {
    pub fn len(&self) -> usize {
        self.confidence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.confidence.is_empty()
    }

    pub fn point(&self, k: usize) -> &'a [f64] {
        &self.coords[k * self.dims..(k + 1) * self.dims]
    }

    pub fn conf(&self, k: usize) -> f64 {
        self.confidence[k]
    }
}

impl PoseSequence {
    /// Builds a sequence from flat frame-major buffers, checking every
    /// invariant: `fps > 0`, at least one frame, `dims` in {2, 3}, finite
    /// coordinates and confidences in [0, 1].
    pub fn new(
        scheme_id: impl Into<String>,
        fps: f32,
        image_size: Option<ImageSize>,
        dims: usize,
        keypoints: usize,
        coords: Vec<f64>,
        confidence: Vec<f64>,
    ) -> Result<Self, ContainerError> {
        let invalid = |m: String| Err(ContainerError::InvalidSequence(m));
        let scheme_id = scheme_id.into();
        if scheme_id.len() > u8::MAX as usize {
            return invalid(format!("scheme id longer than 255 bytes: {scheme_id}"));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return invalid(format!("fps must be positive, got {fps}"));
        }
        if dims != 2 && dims != 3 {
            return invalid(format!("dims must be 2 or 3, got {dims}"));
        }
        if keypoints == 0 || keypoints > u16::MAX as usize {
            return invalid(format!("keypoint count {keypoints} out of range"));
        }
        if confidence.is_empty() || !confidence.len().is_multiple_of(keypoints) {
            return invalid(format!(
                "confidence buffer of {} values is not a positive multiple of {keypoints}",
                confidence.len()
            ));
        }
        let frames = confidence.len() / keypoints;
        if frames > u32::MAX as usize {
            return invalid("too many frames".into());
        }
        if coords.len() != frames * keypoints * dims {
            return invalid(format!(
                "coordinate buffer has {} values, expected {}",
                coords.len(),
                frames * keypoints * dims
            ));
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(ContainerError::BadRecord {
                frame: i / (keypoints * dims),
                keypoint: (i / dims) % keypoints,
                reason: "non-finite coordinate".into(),
            });
        }
        if let Some(i) = confidence.iter().position(|c| !(0.0..=1.0).contains(c)) {
            return Err(ContainerError::BadRecord {
                frame: i / keypoints,
                keypoint: i % keypoints,
                reason: format!("confidence {} outside [0, 1]", confidence[i]),
            });
        }
        Ok(Self {
            scheme_id,
            fps,
            image_size,
            dims,
            keypoints,
            frames,
            coords,
            confidence,
        })
    }

    pub fn scheme_id(&self) -> &str {
        &self.scheme_id
    }

    pub fn fps(&self) -> f32 {
        self.fps
    }

    pub fn image_size(&self) -> Option<ImageSize> {
        self.image_size
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn keypoints(&self) -> usize {
        self.keypoints
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn confidence(&self) -> &[f64] {
        &self.confidence
    }

    pub fn frame(&self, f: usize) -> Frame<'_> {
        let k = self.keypoints;
        Frame {
            coords: &self.coords[f * k * self.dims..(f + 1) * k * self.dims],
            confidence: &self.confidence[f * k..(f + 1) * k],
            dims: self.dims,
        }
    }

    pub fn iter_frames(&self) -> impl Iterator<Item = Frame<'_>> {
        (0..self.frames).map(move |f| self.frame(f))
    }

    pub fn point(&self, f: usize, k: usize) -> &[f64] {
        let start = (f * self.keypoints + k) * self.dims;
        &self.coords[start..start + self.dims]
    }

    pub fn conf(&self, f: usize, k: usize) -> f64 {
        self.confidence[f * self.keypoints + k]
    }

    /// Same header, new coordinates. Panics if the buffer length changes.
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Self, ContainerError> {
        assert_eq!(coords.len(), self.coords.len(), "coordinate buffer length");
        Self::new(
            self.scheme_id.clone(),
            self.fps,
            self.image_size,
            self.dims,
            self.keypoints,
            coords,
            self.confidence.clone(),
        )
    }

    /// Keeps only the listed keypoints, in the given order.
    pub fn select_keypoints(
        &self,
        scheme_id: impl Into<String>,
        indices: &[usize],
    ) -> Result<Self, ContainerError> {
        let mut coords = Vec::with_capacity(self.frames * indices.len() * self.dims);
        let mut confidence = Vec::with_capacity(self.frames * indices.len());
        for f in 0..self.frames {
            for &k in indices {
                coords.extend_from_slice(self.point(f, k));
                confidence.push(self.conf(f, k));
            }
        }
        Self::new(
            scheme_id,
            self.fps,
            self.image_size,
            self.dims,
            indices.len(),
            coords,
            confidence,
        )
    }

    /// Fraction of records with `c == 0`, minimum and mean confidence.
    pub fn confidence_stats(&self) -> ConfidenceStats {
        let n = self.confidence.len() as f64;
        let zeros = self.confidence.iter().filter(|&&c| c == 0.0).count();
        ConfidenceStats {
            min: self
                .confidence
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
            mean: self.confidence.iter().sum::<f64>() / n,
            zero_fraction: zeros as f64 / n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceStats {
    pub min: f64,
    pub mean: f64,
    pub zero_fraction: f64,
}

/// Serializes a sequence to SPC1. Coordinates and confidences are narrowed
/// to f32.
pub fn write_pose(seq: &PoseSequence) -> Vec<u8> {
    let header = 4 + 2 + 1 + seq.scheme_id.len() + 4 + 1 + 4 + 4 + 2;
    let mut out = Vec::with_capacity(header + seq.confidence.len() * (seq.dims + 1) * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(seq.scheme_id.len() as u8);
    out.extend_from_slice(seq.scheme_id.as_bytes());
    out.extend_from_slice(&seq.fps.to_le_bytes());
    let mut flags = 0u8;
    if seq.image_size.is_some() {
        flags |= FLAG_IMAGE_SIZE;
    }
    if seq.dims == 3 {
        flags |= FLAG_3D;
    }
    out.push(flags);
    if let Some(size) = seq.image_size {
        out.extend_from_slice(&size.width.to_le_bytes());
        out.extend_from_slice(&size.height.to_le_bytes());
    }
    out.extend_from_slice(&(seq.frames as u32).to_le_bytes());
    out.extend_from_slice(&(seq.keypoints as u16).to_le_bytes());
    for (point, &c) in seq.coords.chunks_exact(seq.dims).zip(&seq.confidence) {
        for &v in point {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out.extend_from_slice(&(c as f32).to_le_bytes());
    }
    out
}

pub fn write_pose_to<W: Write>(seq: &PoseSequence, mut w: W) -> std::io::Result<()> {
    w.write_all(&write_pose(seq))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        let remaining = self.bytes.len() - self.pos;
        if remaining < n {
            return Err(ContainerError::Truncated {
                offset: self.bytes.len(),
                needed: n - remaining,
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, ContainerError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ContainerError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, ContainerError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parses an SPC1 byte buffer. The buffer must contain exactly one sequence.
pub fn read_pose(bytes: &[u8]) -> Result<PoseSequence, ContainerError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4).map_err(|_| ContainerError::BadMagic {
        found: bytes[..bytes.len().min(4)].to_vec(),
    })?;
    if magic != MAGIC {
        return Err(ContainerError::BadMagic {
            found: magic.to_vec(),
        });
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion(version));
    }
    let id_len = cur.u8()? as usize;
    let id_offset = cur.pos;
    let scheme_id = std::str::from_utf8(cur.take(id_len)?)
        .map_err(|e| ContainerError::MalformedPayload {
            offset: id_offset,
            reason: format!("scheme id is not UTF-8: {e}"),
        })?
        .to_string();
    let fps_offset = cur.pos;
    let fps = cur.f32()?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(ContainerError::MalformedPayload {
            offset: fps_offset,
            reason: format!("fps must be positive, got {fps}"),
        });
    }
    let flags_offset = cur.pos;
    let flags = cur.u8()?;
    if flags & !(FLAG_IMAGE_SIZE | FLAG_3D) != 0 {
        return Err(ContainerError::MalformedPayload {
            offset: flags_offset,
            reason: format!("unknown flag bits {flags:#04x}"),
        });
    }
    let image_size = if flags & FLAG_IMAGE_SIZE != 0 {
        Some(ImageSize {
            width: cur.u16()?,
            height: cur.u16()?,
        })
    } else {
        None
    };
    let dims = if flags & FLAG_3D != 0 { 3 } else { 2 };
    let counts_offset = cur.pos;
    let frames = cur.u32()? as usize;
    let keypoints = cur.u16()? as usize;
    if frames == 0 || keypoints == 0 {
        return Err(ContainerError::MalformedPayload {
            offset: counts_offset,
            reason: format!("empty sequence ({frames} frames x {keypoints} keypoints)"),
        });
    }
    let payload_offset = cur.pos;
    let record = (dims + 1) * 4;
    let expected = frames * keypoints * record;
    let actual = bytes.len() - payload_offset;
    if actual != expected {
        return Err(ContainerError::MalformedPayload {
            offset: payload_offset,
            reason: format!(
                "header declares {frames} frames x {keypoints} keypoints ({expected} payload bytes), found {actual} bytes"
            ),
        });
    }
    let mut coords = Vec::with_capacity(frames * keypoints * dims);
    let mut confidence = Vec::with_capacity(frames * keypoints);
    for _ in 0..frames * keypoints {
        let at = cur.pos;
        for _ in 0..dims {
            let v = cur.f32()?;
            if !v.is_finite() {
                return Err(ContainerError::MalformedPayload {
                    offset: at,
                    reason: "non-finite coordinate".into(),
                });
            }
            coords.push(f64::from(v));
        }
        let c = cur.f32()?;
        if !(0.0..=1.0).contains(&c) {
            return Err(ContainerError::MalformedPayload {
                offset: at + dims * 4,
                reason: format!("confidence {c} outside [0, 1]"),
            });
        }
        confidence.push(f64::from(c));
    }
    PoseSequence::new(
        scheme_id, fps, image_size, dims, keypoints, coords, confidence,
    )
}

pub fn read_pose_from<R: Read>(mut r: R) -> Result<PoseSequence, ContainerError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    read_pose(&bytes)
}

/// Imports the JSON interchange form: a list of frames, each a list of
/// `[x, y, (z,) c]` records. Records without a confidence get `c = 1`, as do
/// all records of schemes that carry no confidence.
pub fn import_json(
    document: &str,
    scheme: &KeypointScheme,
    fps: f32,
) -> Result<PoseSequence, ContainerError> {
    let frames: Vec<Vec<Vec<serde_json::Value>>> = serde_json::from_str(document)?;
    let dims = scheme.dims();
    let total = scheme.total();
    let mut coords = Vec::with_capacity(frames.len() * total * dims);
    let mut confidence = Vec::with_capacity(frames.len() * total);
    for (f, frame) in frames.iter().enumerate() {
        if frame.len() != total {
            return Err(ContainerError::CountMismatch {
                frame: f,
                expected: total,
                found: frame.len(),
            });
        }
        for (k, record) in frame.iter().enumerate() {
            let bad = |reason: String| ContainerError::BadRecord {
                frame: f,
                keypoint: k,
                reason,
            };
            if record.len() != dims && record.len() != dims + 1 {
                return Err(bad(format!(
                    "expected {dims} or {} values, found {}",
                    dims + 1,
                    record.len()
                )));
            }
            let mut values = record.iter().map(|v| {
                v.as_f64()
                    .ok_or_else(|| bad(format!("non-numeric entry {v}")))
            });
            for _ in 0..dims {
                coords.push(values.next().unwrap()?);
            }
            let c = match values.next() {
                Some(c) => c?,
                None => 1.0,
            };
            confidence.push(if scheme.has_confidence() { c } else { 1.0 });
        }
    }
    if frames.is_empty() {
        return Err(ContainerError::InvalidSequence("no frames".into()));
    }
    PoseSequence::new(scheme.id(), fps, None, dims, total, coords, confidence)
}
