//! The corpus manifest: a versioned index of clips, masks, and their labels.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::label::{AttributeLabel, LabelSet, Modality, Setting};
use super::CorpusError;
use crate::maskgen::MaskRecipe;

pub const MANIFEST_VERSION: u32 = 1;

/// Index entry for a source clip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipEntry {
    pub id: String,
    /// Directory of PNG frames, relative to the manifest's root.
    pub path: String,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<AttributeLabel>,
}

/// Index entry for a mask sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub id: String,
    /// Mask container path (directory or `.mrle` file), relative to the
    /// manifest's root. Empty when the mask is regenerated on demand.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub path: String,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<AttributeLabel>,
    /// Generation recipe, kept so the mask can be re-rendered at a paired
    /// clip's exact length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen: Option<MaskRecipe>,
}

/// Immutable corpus index. Mutating operations return a new manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    #[serde(default)]
    pub clips: Vec<ClipEntry>,
    #[serde(default)]
    pub masks: Vec<MaskEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            version: MANIFEST_VERSION,
            clips: vec![],
            masks: vec![],
        }
    }
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates id uniqueness and label rules across all entries.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.version != MANIFEST_VERSION {
            return Err(CorpusError::Validation(format!(
                "unsupported manifest version {}",
                self.version
            )));
        }
        let mut seen = BTreeMap::new();
        for clip in &self.clips {
            if seen.insert(clip.id.clone(), "clip").is_some() {
                return Err(CorpusError::DuplicateId(clip.id.clone()));
            }
            label_set(&clip.labels)?.check_modality(Modality::Video)?;
        }
        for mask in &self.masks {
            if seen.insert(mask.id.clone(), "mask").is_some() {
                return Err(CorpusError::DuplicateId(mask.id.clone()));
            }
            label_set(&mask.labels)?.check_modality(Modality::Mask)?;
        }
        Ok(())
    }

    pub fn clip(&self, id: &str) -> Option<&ClipEntry> {
        self.clips.iter().find(|c| c.id == id)
    }

    pub fn mask(&self, id: &str) -> Option<&MaskEntry> {
        self.masks.iter().find(|m| m.id == id)
    }

    /// Clip ids carrying the given label.
    pub fn clips_with(&self, label: AttributeLabel) -> Vec<&str> {
        self.clips
            .iter()
            .filter(|c| c.labels.contains(&label))
            .map(|c| c.id.as_str())
            .collect()
    }

    /// Mask ids carrying the given label.
    pub fn masks_with(&self, label: AttributeLabel) -> Vec<&str> {
        self.masks
            .iter()
            .filter(|m| m.labels.contains(&label))
            .map(|m| m.id.as_str())
            .collect()
    }

    /// Attaches manually assigned BG scene motion labels, returning a new
    /// manifest. Unknown clip ids and conflicting re-assignments are errors;
    /// re-assigning an identical setting is a no-op.
    pub fn ingest_bg_motion_labels(
        &self,
        records: &[(String, Setting)],
    ) -> Result<Manifest, CorpusError> {
        let mut next = self.clone();
        for (clip_id, setting) in records {
            let clip = next
                .clips
                .iter_mut()
                .find(|c| c.id == *clip_id)
                .ok_or_else(|| CorpusError::UnknownId(clip_id.clone()))?;
            let mut labels = label_set(&clip.labels)?;
            labels.insert(AttributeLabel::new(
                super::label::Attribute::BgSceneMotion,
                *setting,
            ))?;
            clip.labels = labels.iter().collect();
        }
        next.validate()?;
        Ok(next)
    }

    pub fn load(path: &Path) -> Result<Manifest, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        let manifest: Manifest = toml::from_str(&text).map_err(|e| CorpusError::Parse {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        self.validate()?;
        let text = toml::to_string_pretty(self)
            .map_err(|e| CorpusError::Validation(format!("manifest serialize: {e}")))?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
        }
        std::fs::write(path, text).map_err(|e| CorpusError::io(path, e))
    }
}

fn label_set(labels: &[AttributeLabel]) -> Result<LabelSet, CorpusError> {
    let mut set = LabelSet::new();
    for &label in labels {
        set.insert(label)?;
    }
    Ok(set)
}
