//! Keypoint scheme descriptors.
//!
//! A [`KeypointScheme`] names the anatomical components of an estimator's
//! keypoint layout (body, face, hands, legs, feet) and the six arm landmarks
//! used by the signing-frame rule. Layouts are data: they are parsed from TOML
//! descriptors, and the built-in descriptors are embedded from `schemes/`.
//!
//! Descriptor grammar:
//!
//! ```toml
//! id = "coco_wholebody"
//! total = 133
//! dims = 2
//! has_confidence = true          # optional, default true
//! aliases = ["mmpose"]           # optional
//!
//! [components]                   # index range lists: "N" or "A-B", comma separated
//! body = "0-12"
//! legs = "13-16"
//!
//! [landmarks]                    # <side>_<landmark> = index
//! left_wrist = 9
//! ```
//!
//! A derived descriptor instead names a `parent` scheme and the parent indices
//! it `keep`s; components and landmarks are projected from the parent.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("descriptor parse error: {0}")]
    Parse(String),
    #[error("descriptor is missing required field `{0}`")]
    MissingField(&'static str),
    #[error("unsupported dimensionality {0} (expected 2 or 3)")]
    InvalidDims(u64),
    #[error("invalid index range `{0}`")]
    InvalidRange(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("unknown landmark key `{0}`")]
    UnknownLandmark(String),
    #[error("components `{first}` and `{second}` both contain index {index}")]
    OverlappingComponents {
        first: Component,
        second: Component,
        index: usize,
    },
    #[error("component `{component}` index {index} out of range for total {total}")]
    ComponentOutOfRange {
        component: Component,
        index: usize,
        total: usize,
    },
    #[error("landmark {side}_{landmark} index {index} out of range for total {total}")]
    LandmarkOutOfRange {
        landmark: Landmark,
        side: Side,
        index: usize,
        total: usize,
    },
    #[error("scheme `{scheme}` has no {side}_{landmark} landmark")]
    MissingLandmark {
        scheme: String,
        landmark: Landmark,
        side: Side,
    },
    #[error("scheme `{scheme}` has no `{component}` component")]
    MissingComponent {
        scheme: String,
        component: Component,
    },
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("duplicate scheme id or alias `{0}`")]
    DuplicateId(String),
    #[error("sequence has {found} keypoints x {found_dims}D, scheme `{scheme}` expects {expected} x {expected_dims}D")]
    LayoutMismatch {
        scheme: String,
        expected: usize,
        expected_dims: usize,
        found: usize,
        found_dims: usize,
    },
    #[error("reading descriptor {path}: {message}")]
    Io { path: String, message: String },
}

/// Anatomical component names used in descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Body,
    Face,
    LeftHand,
    RightHand,
    Legs,
    Feet,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Body,
        Component::Face,
        Component::LeftHand,
        Component::RightHand,
        Component::Legs,
        Component::Feet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Body => "body",
            Component::Face => "face",
            Component::LeftHand => "left_hand",
            Component::RightHand => "right_hand",
            Component::Legs => "legs",
            Component::Feet => "feet",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Component {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Component::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| SchemeError::UnknownComponent(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Landmark {
    Wrist,
    Elbow,
    Shoulder,
}

impl fmt::Display for Landmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Landmark::Wrist => "wrist",
            Landmark::Elbow => "elbow",
            Landmark::Shoulder => "shoulder",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn hand(self) -> Component {
        match self {
            Side::Left => Component::LeftHand,
            Side::Right => Component::RightHand,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Keypoint subsets addressable by the analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Every keypoint except legs and feet.
    AllExclLegs,
    Hands,
    Face,
    LeftHand,
    RightHand,
    Legs,
    Body,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::AllExclLegs => "all",
            Region::Hands => "hands",
            Region::Face => "face",
            Region::LeftHand => "left_hand",
            Region::RightHand => "right_hand",
            Region::Legs => "legs",
            Region::Body => "body",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "all" | "all_excl_legs" => Region::AllExclLegs,
            "hands" => Region::Hands,
            "face" => Region::Face,
            "left_hand" => Region::LeftHand,
            "right_hand" => Region::RightHand,
            "legs" => Region::Legs,
            "body" => Region::Body,
            other => return Err(format!("unknown region `{other}`")),
        })
    }
}

/// Link from a derived scheme to the scheme it was cut from: `indices[i]` is
/// the parent index of this scheme's keypoint `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    pub parent: String,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeypointScheme {
    id: String,
    total: usize,
    dims: usize,
    has_confidence: bool,
    aliases: Vec<String>,
    components: BTreeMap<Component, Vec<usize>>,
    landmarks: BTreeMap<(Landmark, Side), usize>,
    projection: Option<Projection>,
}

impl KeypointScheme {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn has_confidence(&self) -> bool {
        self.has_confidence
    }

    pub fn aliases(&self) -> &[String] {
        &self.aliases
    }

    pub fn projection(&self) -> Option<&Projection> {
        self.projection.as_ref()
    }

    /// Sorted indices of a component, or `None` if the scheme lacks it.
    pub fn component(&self, component: Component) -> Option<&[usize]> {
        self.components.get(&component).map(Vec::as_slice)
    }

    pub fn components(&self) -> impl Iterator<Item = (Component, &[usize])> {
        self.components.iter().map(|(c, v)| (*c, v.as_slice()))
    }

    fn require(&self, component: Component) -> Result<&[usize], SchemeError> {
        self.component(component)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| SchemeError::MissingComponent {
                scheme: self.id.clone(),
                component,
            })
    }

    /// Indices of legs and feet (both may be absent).
    pub fn leg_indices(&self) -> Vec<usize> {
        let mut out: Vec<usize> = [Component::Legs, Component::Feet]
            .iter()
            .filter_map(|c| self.component(*c))
            .flatten()
            .copied()
            .collect();
        out.sort_unstable();
        out
    }

    pub fn region_indices(&self, region: Region) -> Result<Vec<usize>, SchemeError> {
        let mut out = match region {
            Region::AllExclLegs => {
                let legs = self.leg_indices();
                (0..self.total)
                    .filter(|i| legs.binary_search(i).is_err())
                    .collect()
            }
            Region::Hands => {
                let mut v = self.require(Component::LeftHand)?.to_vec();
                v.extend_from_slice(self.require(Component::RightHand)?);
                v
            }
            Region::Face => self.require(Component::Face)?.to_vec(),
            Region::LeftHand => self.require(Component::LeftHand)?.to_vec(),
            Region::RightHand => self.require(Component::RightHand)?.to_vec(),
            Region::Legs => self.require(Component::Legs)?.to_vec(),
            Region::Body => self.require(Component::Body)?.to_vec(),
        };
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn landmark_index(&self, landmark: Landmark, side: Side) -> Result<usize, SchemeError> {
        self.landmarks
            .get(&(landmark, side))
            .copied()
            .ok_or_else(|| SchemeError::MissingLandmark {
                scheme: self.id.clone(),
                landmark,
                side,
            })
    }

    /// Checks that a sequence's shape matches this layout.
    pub fn check_layout(&self, keypoints: usize, dims: usize) -> Result<(), SchemeError> {
        if keypoints != self.total || dims != self.dims {
            return Err(SchemeError::LayoutMismatch {
                scheme: self.id.clone(),
                expected: self.total,
                expected_dims: self.dims,
                found: keypoints,
                found_dims: dims,
            });
        }
        Ok(())
    }

    /// Builds the view of this scheme restricted to `keep` (sorted parent
    /// indices). Components are intersected and renumbered; landmarks that are
    /// not kept are dropped.
    pub fn subset(&self, id: impl Into<String>, keep: &[usize]) -> KeypointScheme {
        let position: BTreeMap<usize, usize> = keep
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let components = self
            .components
            .iter()
            .map(|(c, idx)| {
                let mapped: Vec<usize> = idx
                    .iter()
                    .filter_map(|i| position.get(i).copied())
                    .collect();
                (*c, mapped)
            })
            .filter(|(_, v)| !v.is_empty())
            .collect();
        let landmarks = self
            .landmarks
            .iter()
            .filter_map(|(k, i)| position.get(i).map(|&n| (*k, n)))
            .collect();
        KeypointScheme {
            id: id.into(),
            total: keep.len(),
            dims: self.dims,
            has_confidence: self.has_confidence,
            aliases: Vec::new(),
            components,
            landmarks,
            projection: Some(Projection {
                parent: self.id.clone(),
                indices: keep.to_vec(),
            }),
        }
    }

    fn validate(&self) -> Result<(), SchemeError> {
        let mut owner: BTreeMap<usize, Component> = BTreeMap::new();
        for (&component, indices) in &self.components {
            for &index in indices {
                if index >= self.total {
                    return Err(SchemeError::ComponentOutOfRange {
                        component,
                        index,
                        total: self.total,
                    });
                }
                if let Some(&first) = owner.get(&index) {
                    return Err(SchemeError::OverlappingComponents {
                        first,
                        second: component,
                        index,
                    });
                }
                owner.insert(index, component);
            }
        }
        for &(landmark, side) in &[
            (Landmark::Wrist, Side::Left),
            (Landmark::Wrist, Side::Right),
            (Landmark::Elbow, Side::Left),
            (Landmark::Elbow, Side::Right),
            (Landmark::Shoulder, Side::Left),
            (Landmark::Shoulder, Side::Right),
        ] {
            let index = self.landmark_index(landmark, side)?;
            if index >= self.total {
                return Err(SchemeError::LandmarkOutOfRange {
                    landmark,
                    side,
                    index,
                    total: self.total,
                });
            }
        }
        Ok(())
    }

    /// Canonical TOML descriptor for this scheme (derived schemes are written
    /// out flat).
    pub fn to_descriptor(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("id = \"{}\"\n", self.id));
        out.push_str(&format!("total = {}\n", self.total));
        out.push_str(&format!("dims = {}\n", self.dims));
        out.push_str(&format!("has_confidence = {}\n", self.has_confidence));
        if !self.aliases.is_empty() {
            let quoted: Vec<String> = self.aliases.iter().map(|a| format!("\"{a}\"")).collect();
            out.push_str(&format!("aliases = [{}]\n", quoted.join(", ")));
        }
        out.push_str("\n[components]\n");
        for (c, idx) in &self.components {
            out.push_str(&format!("{c} = \"{}\"\n", format_ranges(idx)));
        }
        out.push_str("\n[landmarks]\n");
        for ((landmark, side), index) in &self.landmarks {
            out.push_str(&format!("{side}_{landmark} = {index}\n"));
        }
        out
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Descriptor {
    id: Option<String>,
    total: Option<u64>,
    dims: Option<u64>,
    has_confidence: Option<bool>,
    #[serde(default)]
    aliases: Vec<String>,
    #[serde(default)]
    components: BTreeMap<String, IndexList>,
    #[serde(default)]
    landmarks: BTreeMap<String, u64>,
    parent: Option<String>,
    keep: Option<IndexList>,
}

/// Either a range-list string or an explicit integer array.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum IndexList {
    Ranges(String),
    Explicit(Vec<u64>),
}

impl IndexList {
    fn resolve(&self) -> Result<Vec<usize>, SchemeError> {
        match self {
            IndexList::Ranges(s) => parse_ranges(s),
            IndexList::Explicit(v) => Ok(v.iter().map(|&i| i as usize).collect()),
        }
    }
}

/// Parses `"0-12, 17, 20-25"` into a sorted index list.
pub fn parse_ranges(text: &str) -> Result<Vec<usize>, SchemeError> {
    let bad = || SchemeError::InvalidRange(text.to_string());
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if b < a {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    out.sort_unstable();
    let before = out.len();
    out.dedup();
    if out.len() != before {
        return Err(bad());
    }
    Ok(out)
}

/// Inverse of [`parse_ranges`] for sorted input.
pub fn format_ranges(indices: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < indices.len() {
        let start = indices[i];
        let mut end = start;
        while i + 1 < indices.len() && indices[i + 1] == end + 1 {
            i += 1;
            end = indices[i];
        }
        parts.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
        i += 1;
    }
    parts.join(", ")
}

fn parse_landmark_key(key: &str) -> Result<(Landmark, Side), SchemeError> {
    let unknown = || SchemeError::UnknownLandmark(key.to_string());
    let (side, name) = key.split_once('_').ok_or_else(unknown)?;
    let side = match side {
        "left" => Side::Left,
        "right" => Side::Right,
        _ => return Err(unknown()),
    };
    let landmark = match name {
        "wrist" => Landmark::Wrist,
        "elbow" => Landmark::Elbow,
        "shoulder" => Landmark::Shoulder,
        _ => return Err(unknown()),
    };
    Ok((landmark, side))
}

fn parse_descriptor(text: &str) -> Result<Descriptor, SchemeError> {
    toml::from_str(text).map_err(|e| SchemeError::Parse(e.to_string()))
}

/// Loads a standalone (non-derived) descriptor.
pub fn load_scheme(text: &str) -> Result<KeypointScheme, SchemeError> {
    let desc = parse_descriptor(text)?;
    if let Some(parent) = desc.parent {
        return Err(SchemeError::UnknownScheme(parent));
    }
    build_flat(desc)
}

fn build_flat(desc: Descriptor) -> Result<KeypointScheme, SchemeError> {
    let id = desc.id.ok_or(SchemeError::MissingField("id"))?;
    let total = desc.total.ok_or(SchemeError::MissingField("total"))? as usize;
    let dims = desc.dims.ok_or(SchemeError::MissingField("dims"))?;
    if dims != 2 && dims != 3 {
        return Err(SchemeError::InvalidDims(dims));
    }
    if desc.keep.is_some() {
        return Err(SchemeError::MissingField("parent"));
    }
    let mut components = BTreeMap::new();
    for (name, list) in &desc.components {
        let component: Component = name.parse()?;
        components.insert(component, list.resolve()?);
    }
    let mut landmarks = BTreeMap::new();
    for (key, &index) in &desc.landmarks {
        landmarks.insert(parse_landmark_key(key)?, index as usize);
    }
    let scheme = KeypointScheme {
        id,
        total,
        dims: dims as usize,
        has_confidence: desc.has_confidence.unwrap_or(true),
        aliases: desc.aliases,
        components,
        landmarks,
        projection: None,
    };
    scheme.validate()?;
    Ok(scheme)
}

const BUILTIN_DESCRIPTORS: &[(&str, &str)] = &[
    (
        "mediapipe_holistic",
        include_str!("../schemes/mediapipe_holistic.toml"),
    ),
    (
        "mediapipe_holistic_contours",
        include_str!("../schemes/mediapipe_holistic_contours.toml"),
    ),
    ("openpose_137", include_str!("../schemes/openpose_137.toml")),
    (
        "coco_wholebody",
        include_str!("../schemes/coco_wholebody.toml"),
    ),
    ("sapiens_308", include_str!("../schemes/sapiens_308.toml")),
    (
        "halpe_fullbody",
        include_str!("../schemes/halpe_fullbody.toml"),
    ),
    ("smplx_137", include_str!("../schemes/smplx_137.toml")),
];

/// Raw text of a built-in descriptor.
pub fn builtin_descriptor(id: &str) -> Option<&'static str> {
    BUILTIN_DESCRIPTORS
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, text)| *text)
}

pub fn builtin_ids() -> impl Iterator<Item = &'static str> {
    BUILTIN_DESCRIPTORS.iter().map(|(name, _)| *name)
}

/// Schemes addressable by id or alias.
#[derive(Debug, Clone, Default)]
pub struct SchemeRegistry {
    schemes: BTreeMap<String, KeypointScheme>,
    aliases: BTreeMap<String, String>,
}

impl SchemeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut registry = Self::new();
        for (_, text) in BUILTIN_DESCRIPTORS {
            registry
                .load(text)
                .expect("built-in scheme descriptors are valid");
        }
        registry
    }

    /// Parses a descriptor, resolving `parent` against schemes already
    /// registered, and registers the result.
    pub fn load(&mut self, text: &str) -> Result<&KeypointScheme, SchemeError> {
        let scheme = self.parse(text)?;
        self.insert(scheme)
    }

    /// Parses a descriptor without registering it.
    pub fn parse(&self, text: &str) -> Result<KeypointScheme, SchemeError> {
        let desc = parse_descriptor(text)?;
        match desc.parent.clone() {
            None => build_flat(desc),
            Some(parent_id) => {
                let parent = self.get(&parent_id)?;
                let id = desc.id.ok_or(SchemeError::MissingField("id"))?;
                let keep = desc
                    .keep
                    .ok_or(SchemeError::MissingField("keep"))?
                    .resolve()?;
                if let Some(&bad) = keep.iter().find(|&&i| i >= parent.total) {
                    return Err(SchemeError::InvalidRange(format!(
                        "keep index {bad} out of range for parent `{parent_id}`"
                    )));
                }
                if desc.total.is_some_and(|t| t as usize != keep.len()) {
                    return Err(SchemeError::Parse(format!(
                        "declared total does not match {} kept indices",
                        keep.len()
                    )));
                }
                let mut scheme = parent.subset(id, &keep);
                scheme.aliases = desc.aliases;
                scheme.validate()?;
                Ok(scheme)
            }
        }
    }

    pub fn load_file(&mut self, path: &Path) -> Result<&KeypointScheme, SchemeError> {
        let text = std::fs::read_to_string(path).map_err(|e| SchemeError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.load(&text)
    }

    pub fn insert(&mut self, scheme: KeypointScheme) -> Result<&KeypointScheme, SchemeError> {
        for name in std::iter::once(&scheme.id).chain(&scheme.aliases) {
            if self.schemes.contains_key(name) || self.aliases.contains_key(name) {
                return Err(SchemeError::DuplicateId(name.clone()));
            }
        }
        for alias in &scheme.aliases {
            self.aliases.insert(alias.clone(), scheme.id.clone());
        }
        let id = scheme.id.clone();
        Ok(self.schemes.entry(id).or_insert(scheme))
    }

    /// Like [`insert`](Self::insert), but a scheme with the same id is
    /// swapped out together with its aliases.
    pub fn replace(&mut self, scheme: KeypointScheme) -> Result<&KeypointScheme, SchemeError> {
        let Some(old) = self.schemes.remove(&scheme.id) else {
            return self.insert(scheme);
        };
        for alias in &old.aliases {
            self.aliases.remove(alias);
        }
        if let Some(name) = scheme
            .aliases
            .iter()
            .find(|a| self.schemes.contains_key(*a) || self.aliases.contains_key(*a))
        {
            let name = name.clone();
            for alias in &old.aliases {
                self.aliases.insert(alias.clone(), old.id.clone());
            }
            self.schemes.insert(old.id.clone(), old);
            return Err(SchemeError::DuplicateId(name));
        }
        self.insert(scheme)
    }

    pub fn get(&self, name: &str) -> Result<&KeypointScheme, SchemeError> {
        let id = self.aliases.get(name).map(String::as_str).unwrap_or(name);
        self.schemes
            .get(id)
            .ok_or_else(|| SchemeError::UnknownScheme(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &KeypointScheme> {
        self.schemes.values()
    }
}
