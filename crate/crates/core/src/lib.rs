//! Pose-quality diagnostics and translation-input preprocessing for sign
//! language keypoint sequences.
//!
//! * [`scheme`]: keypoint layouts of the supported estimators,
//! * [`container`]: the SPC1 sequence container and JSON import,
//! * [`preprocess`]: leg removal, normalization, zero-fill and flattening,
//! * [`stability`]: motion energy and jitter metrics with corpus aggregates,
//! * [`hands`]: missing-hand statistics over signing frames,
//! * [`occlusion`]: bounding-box screening for occlusion review,
//! * [`report`]: deterministic CSV/JSON output.

pub mod container;
pub mod hands;
pub mod occlusion;
pub mod preprocess;
pub mod report;
pub mod scheme;
pub mod stability;
pub mod synth;

pub use container::{import_json, read_pose, write_pose, ContainerError, ImageSize, PoseSequence};
pub use scheme::{KeypointScheme, Landmark, Region, SchemeError, SchemeRegistry, Side};
