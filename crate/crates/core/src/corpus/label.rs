//! Content attributes and their low/high settings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// The five content attributes that characterize clips and masks.
///
/// Camera motion and BG scene motion describe source videos; the FG
/// attributes describe occlusion masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    CameraMotion,
    BgSceneMotion,
    FgDisplacement,
    FgPoseMotion,
    FgSize,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::CameraMotion,
        Attribute::BgSceneMotion,
        Attribute::FgDisplacement,
        Attribute::FgPoseMotion,
        Attribute::FgSize,
    ];

    /// Attributes that apply to occlusion masks.
    pub const MASK: [Attribute; 3] = [
        Attribute::FgDisplacement,
        Attribute::FgPoseMotion,
        Attribute::FgSize,
    ];

    /// Attributes that apply to source videos.
    pub const VIDEO: [Attribute; 2] = [Attribute::CameraMotion, Attribute::BgSceneMotion];

    pub fn applies_to(self, modality: Modality) -> bool {
        match self {
            Attribute::CameraMotion | Attribute::BgSceneMotion => modality == Modality::Video,
            _ => modality == Modality::Mask,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::CameraMotion => "camera_motion",
            Attribute::BgSceneMotion => "bg_scene_motion",
            Attribute::FgDisplacement => "fg_displacement",
            Attribute::FgPoseMotion => "fg_pose_motion",
            Attribute::FgSize => "fg_size",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribute {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "camera_motion" => Ok(Attribute::CameraMotion),
            "bg_scene_motion" => Ok(Attribute::BgSceneMotion),
            "fg_displacement" => Ok(Attribute::FgDisplacement),
            "fg_pose_motion" => Ok(Attribute::FgPoseMotion),
            "fg_size" => Ok(Attribute::FgSize),
            other => Err(CorpusError::BadLabel(other.to_string())),
        }
    }
}

/// Low or high setting of an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Low,
    High,
}

impl Setting {
    pub const BOTH: [Setting; 2] = [Setting::Low, Setting::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Low => "low",
            Setting::High => "high",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The two modalities an attribute can describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Video,
    Mask,
}

/// An (attribute, setting) pair, serialized as `attribute:setting`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeLabel {
    pub attribute: Attribute,
    pub setting: Setting,
}

impl AttributeLabel {
    pub fn new(attribute: Attribute, setting: Setting) -> Self {
        Self { attribute, setting }
    }

    /// Stable slug used in slice names and file names, e.g. `fg_size_high`.
    pub fn slug(&self) -> String {
        format!("{}_{}", self.attribute, self.setting)
    }
}

impl fmt::Display for AttributeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.attribute, self.setting)
    }
}

impl FromStr for AttributeLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (attr, setting) = s
            .split_once(':')
            .ok_or_else(|| CorpusError::BadLabel(s.to_string()))?;
        let attribute = attr.parse()?;
        let setting = match setting {
            "low" => Setting::Low,
            "high" => Setting::High,
            _ => return Err(CorpusError::BadLabel(s.to_string())),
        };
        Ok(AttributeLabel { attribute, setting })
    }
}

impl Serialize for AttributeLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AttributeLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A set of attribute labels with at most one setting per attribute.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    settings: BTreeMap<Attribute, Setting>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a label. Re-adding the same (attribute, setting) is a no-op;
    /// adding the opposite setting of an already-labeled attribute is a
    /// conflict.
    pub fn insert(&mut self, label: AttributeLabel) -> Result<(), CorpusError> {
        match self.settings.get(&label.attribute) {
            Some(existing) if *existing != label.setting => Err(CorpusError::LabelConflict {
                attribute: label.attribute,
                existing: *existing,
                new: label.setting,
            }),
            _ => {
                self.settings.insert(label.attribute, label.setting);
                Ok(())
            }
        }
    }

    pub fn get(&self, attribute: Attribute) -> Option<Setting> {
        self.settings.get(&attribute).copied()
    }

    pub fn contains(&self, label: AttributeLabel) -> bool {
        self.get(label.attribute) == Some(label.setting)
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    /// Labels in attribute order.
    pub fn iter(&self) -> impl Iterator<Item = AttributeLabel> + '_ {
        self.settings
            .iter()
            .map(|(a, s)| AttributeLabel::new(*a, *s))
    }

    /// Validates that every attribute in the set applies to `modality`.
    pub fn check_modality(&self, modality: Modality) -> Result<(), CorpusError> {
        for (attr, _) in &self.settings {
            if !attr.applies_to(modality) {
                return Err(CorpusError::ModalityMismatch {
                    attribute: *attr,
                    modality,
                });
            }
        }
        Ok(())
    }
}

impl FromIterator<AttributeLabel> for LabelSet {
    /// Panics on conflicting labels; use `insert` for fallible construction.
    fn from_iter<I: IntoIterator<Item = AttributeLabel>>(iter: I) -> Self {
        let mut set = LabelSet::new();
        for label in iter {
            set.insert(label).expect("conflicting labels in iterator");
        }
        set
    }
}
