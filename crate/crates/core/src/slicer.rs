//! Dataset slices: fixed-size sets of (clip, mask) pairs in which exactly
//! one content attribute is held at a controlled setting.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Attribute, AttributeLabel, Manifest, Modality, Setting};
use crate::rng;

/// Pairs per protocol slice.
pub const SLICE_SIZE: usize = 150;

#[derive(Debug, thiserror::Error)]
pub enum SliceError {
    #[error(
        "insufficient {modality:?} pool for {label}: need {need}, have {have}"
    )]
    InsufficientPool {
        label: String,
        modality: Modality,
        need: usize,
        have: usize,
    },
    #[error("slice has {got} pairs, expected {expected}")]
    WrongSize { got: usize, expected: usize },
    #[error("duplicate pair ({clip}, {mask})")]
    DuplicatePair { clip: String, mask: String },
    #[error("{entry} is missing the controlled label {label}")]
    MissingControlledLabel { entry: String, label: String },
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
}

/// A named list of (clip id, mask id) pairs with one controlled attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub name: String,
    pub controlled: AttributeLabel,
    pub seed: u64,
    pub pairs: Vec<(String, String)>,
}

impl Slice {
    /// Validates the slice against a manifest: expected pair count, no
    /// duplicate pairs, and 100% controlled-label coverage on the
    /// controlled modality.
    pub fn validate(&self, manifest: &Manifest, expected_size: usize) -> Result<(), SliceError> {
        if self.pairs.len() != expected_size {
            return Err(SliceError::WrongSize {
                got: self.pairs.len(),
                expected: expected_size,
            });
        }
        let mut seen = BTreeSet::new();
        for (clip_id, mask_id) in &self.pairs {
            if !seen.insert((clip_id.clone(), mask_id.clone())) {
                return Err(SliceError::DuplicatePair {
                    clip: clip_id.clone(),
                    mask: mask_id.clone(),
                });
            }
            let (entry_id, labels) = match controlled_modality(self.controlled.attribute) {
                Modality::Video => {
                    let entry = manifest
                        .clip(clip_id)
                        .ok_or_else(|| crate::corpus::CorpusError::UnknownId(clip_id.clone()))?;
                    (&entry.id, &entry.labels)
                }
                Modality::Mask => {
                    let entry = manifest
                        .mask(mask_id)
                        .ok_or_else(|| crate::corpus::CorpusError::UnknownId(mask_id.clone()))?;
                    (&entry.id, &entry.labels)
                }
            };
            if !labels.contains(&self.controlled) {
                return Err(SliceError::MissingControlledLabel {
                    entry: entry_id.clone(),
                    label: self.controlled.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), SliceError> {
        let text = toml::to_string_pretty(self).map_err(|e| SliceError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| SliceError::Io {
                path: path.display().to_string(),
                detail: e.to_string(),
            })?;
        }
        std::fs::write(path, text).map_err(|e| SliceError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Slice, SliceError> {
        let text = std::fs::read_to_string(path).map_err(|e| SliceError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| SliceError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }
}

fn controlled_modality(attribute: Attribute) -> Modality {
    if attribute.applies_to(Modality::Video) {
        Modality::Video
    } else {
        Modality::Mask
    }
}

/// Builds one protocol slice of [`SLICE_SIZE`] pairs.
pub fn build_slice(
    manifest: &Manifest,
    controlled: AttributeLabel,
    seed: u64,
) -> Result<Slice, SliceError> {
    build_slice_sized(manifest, controlled, seed, SLICE_SIZE)
}

/// Builds a slice with an explicit pair count (the protocol uses 150;
/// smaller counts serve smoke tests and downsized corpora).
///
/// The controlled modality samples uniformly without replacement from the
/// entries carrying the controlled label; the other modality samples from
/// its full pool. The two samples are paired positionally.
pub fn build_slice_sized(
    manifest: &Manifest,
    controlled: AttributeLabel,
    seed: u64,
    size: usize,
) -> Result<Slice, SliceError> {
    let modality = controlled_modality(controlled.attribute);

    // Entry ids are sorted before sampling so results depend only on the
    // manifest's content, not its entry order.
    let (mut controlled_pool, mut other_pool): (Vec<String>, Vec<String>) = match modality {
        Modality::Video => (
            manifest
                .clips_with(controlled)
                .into_iter()
                .map(String::from)
                .collect(),
            manifest.masks.iter().map(|m| m.id.clone()).collect(),
        ),
        Modality::Mask => (
            manifest
                .masks_with(controlled)
                .into_iter()
                .map(String::from)
                .collect(),
            manifest.clips.iter().map(|c| c.id.clone()).collect(),
        ),
    };
    controlled_pool.sort();
    other_pool.sort();

    if controlled_pool.len() < size {
        return Err(SliceError::InsufficientPool {
            label: controlled.to_string(),
            modality,
            need: size,
            have: controlled_pool.len(),
        });
    }
    let other_modality = match modality {
        Modality::Video => Modality::Mask,
        Modality::Mask => Modality::Video,
    };
    if other_pool.len() < size {
        return Err(SliceError::InsufficientPool {
            label: "any".into(),
            modality: other_modality,
            need: size,
            have: other_pool.len(),
        });
    }

    let name = controlled.slug();
    let mut rng = rng::stream(seed, &format!("slice.{name}"));
    let (controlled_sample, _) = controlled_pool.partial_shuffle(&mut rng, size);
    let controlled_sample = controlled_sample.to_vec();
    let (other_sample, _) = other_pool.partial_shuffle(&mut rng, size);

    let pairs = match modality {
        Modality::Video => controlled_sample
            .iter()
            .zip(other_sample.iter())
            .map(|(c, m)| (c.clone(), m.clone()))
            .collect(),
        Modality::Mask => other_sample
            .iter()
            .zip(controlled_sample.iter())
            .map(|(c, m)| (c.clone(), m.clone()))
            .collect(),
    };
    let slice = Slice {
        name,
        controlled,
        seed,
        pairs,
    };
    slice.validate(manifest, size)?;
    Ok(slice)
}

/// Builds the ten protocol slices (five attributes x low/high), with
/// per-slice seeds derived from the master seed.
pub fn build_all_slices(manifest: &Manifest, master_seed: u64) -> Result<Vec<Slice>, SliceError> {
    build_all_slices_sized(manifest, master_seed, SLICE_SIZE)
}

pub fn build_all_slices_sized(
    manifest: &Manifest,
    master_seed: u64,
    size: usize,
) -> Result<Vec<Slice>, SliceError> {
    let mut slices = Vec::with_capacity(10);
    for attribute in Attribute::ALL {
        for setting in Setting::BOTH {
            let label = AttributeLabel::new(attribute, setting);
            let slice_seed = rng::child_seed(master_seed, &label.slug());
            slices.push(build_slice_sized(manifest, label, slice_seed, size)?);
        }
    }
    Ok(slices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ClipEntry, MaskEntry};

    /// A manifest where every attribute setting has at least `per_label`
    /// entries; entries beyond the labeled ones stay unlabeled.
    fn synthetic_manifest(per_label: usize, extra: usize) -> Manifest {
        let mut manifest = Manifest::new();
        let mut clip_n = 0;
        let mut mask_n = 0;
        for attribute in Attribute::ALL {
            for setting in Setting::BOTH {
                let label = AttributeLabel::new(attribute, setting);
                for _ in 0..per_label {
                    if attribute.applies_to(Modality::Video) {
                        manifest.clips.push(ClipEntry {
                            id: format!("c{clip_n:04}"),
                            path: String::new(),
                            length: 60,
                            labels: vec![label],
                        });
                        clip_n += 1;
                    } else {
                        manifest.masks.push(MaskEntry {
                            id: format!("m{mask_n:04}"),
                            path: String::new(),
                            length: 60,
                            seed: Some(mask_n as u64),
                            labels: vec![label],
                            gen: None,
                        });
                        mask_n += 1;
                    }
                }
            }
        }
        for _ in 0..extra {
            manifest.clips.push(ClipEntry {
                id: format!("c{clip_n:04}"),
                path: String::new(),
                length: 60,
                labels: vec![],
            });
            clip_n += 1;
            manifest.masks.push(MaskEntry {
                id: format!("m{mask_n:04}"),
                path: String::new(),
                length: 60,
                seed: Some(mask_n as u64),
                labels: vec![],
                gen: None,
            });
            mask_n += 1;
        }
        manifest.validate().unwrap();
        manifest
    }

    #[test]
    fn deterministic_and_exact_size() {
        let manifest = synthetic_manifest(160, 40);
        let label: AttributeLabel = "camera_motion:low".parse().unwrap();
        let a = build_slice(&manifest, label, 9).unwrap();
        let b = build_slice(&manifest, label, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pairs.len(), SLICE_SIZE);
        let c = build_slice(&manifest, label, 10).unwrap();
        assert_ne!(a.pairs, c.pairs);
    }

    #[test]
    fn exhaustive_pool_uses_every_item() {
        let manifest = synthetic_manifest(150, 10);
        let label: AttributeLabel = "fg_size:high".parse().unwrap();
        let slice = build_slice(&manifest, label, 3).unwrap();
        let expected: BTreeSet<_> = manifest
            .masks_with(label)
            .into_iter()
            .map(String::from)
            .collect();
        let got: BTreeSet<_> = slice.pairs.iter().map(|(_, m)| m.clone()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn shortfall_reports_counts() {
        let manifest = synthetic_manifest(149, 30);
        let label: AttributeLabel = "fg_size:high".parse().unwrap();
        match build_slice(&manifest, label, 0) {
            Err(SliceError::InsufficientPool { need, have, .. }) => {
                assert_eq!((need, have), (150, 149));
            }
            other => panic!("expected pool error, got {other:?}"),
        }
    }

    #[test]
    fn all_ten_slices_and_disjointness() {
        let manifest = synthetic_manifest(155, 20);
        let slices = build_all_slices(&manifest, 42).unwrap();
        assert_eq!(slices.len(), 10);
        let names: BTreeSet<_> = slices.iter().map(|s| s.name.clone()).collect();
        assert_eq!(names.len(), 10);

        // Controlled-modality disjointness for each attribute's low/high.
        for attribute in Attribute::MASK {
            let low = slices
                .iter()
                .find(|s| s.controlled == AttributeLabel::new(attribute, Setting::Low))
                .unwrap();
            let high = slices
                .iter()
                .find(|s| s.controlled == AttributeLabel::new(attribute, Setting::High))
                .unwrap();
            let low_masks: BTreeSet<_> = low.pairs.iter().map(|(_, m)| m).collect();
            let high_masks: BTreeSet<_> = high.pairs.iter().map(|(_, m)| m).collect();
            assert!(low_masks.is_disjoint(&high_masks));
        }
    }

    #[test]
    fn slice_file_round_trip() {
        let manifest = synthetic_manifest(150, 5);
        let label: AttributeLabel = "bg_scene_motion:high".parse().unwrap();
        let slice = build_slice(&manifest, label, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slice.toml");
        slice.save(&path).unwrap();
        assert_eq!(Slice::load(&path).unwrap(), slice);
    }
}
