//! Corpus data model: clips, masks, attribute labels, and the manifest.

mod clip;
mod label;
mod manifest;
mod mask;

pub use clip::{split_into_clips, SplitWarning, VideoClip, MAX_CLIP_LEN, MIN_CLIP_LEN};
pub use label::{Attribute, AttributeLabel, LabelSet, Modality, Setting};
pub use manifest::{ClipEntry, Manifest, MaskEntry, MANIFEST_VERSION};
pub use mask::{MaskFrame, MaskSequence};

/// Errors from corpus construction, persistence, and label ingestion.
#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error: {detail}")]
    Parse { path: String, detail: String },
    #[error("{0}")]
    Validation(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("unknown id {0:?}")]
    UnknownId(String),
    #[error("malformed label {0:?}")]
    BadLabel(String),
    #[error("conflicting {attribute} labels: already {existing}, refusing {new}")]
    LabelConflict {
        attribute: Attribute,
        existing: Setting,
        new: Setting,
    },
    #[error("{attribute} does not apply to {modality:?} entries")]
    ModalityMismatch {
        attribute: Attribute,
        modality: Modality,
    },
}

impl CorpusError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
