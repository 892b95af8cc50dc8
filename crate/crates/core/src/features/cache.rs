//! On-disk embedding cache keyed by (content hash, extractor fingerprint).

use std::path::{Path, PathBuf};

use super::{Embedding, FeatureError, Fingerprint};

/// Directory layout: `<root>/<fingerprint>/<content-hash>.emb`, each file
/// holding little-endian f32s. Writes go through a temp file and rename,
/// so concurrent writers of the same key are last-writer-wins and readers
/// never see partial entries.
pub struct EmbeddingCache {
    root: PathBuf,
}

impl EmbeddingCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn entry_path(&self, fingerprint: &Fingerprint, content_hash: &str) -> PathBuf {
        self.root
            .join(fingerprint.as_str())
            .join(format!("{content_hash}.emb"))
    }

    pub fn get(&self, fingerprint: &Fingerprint, content_hash: &str) -> Option<Vec<f32>> {
        let bytes = std::fs::read(self.entry_path(fingerprint, content_hash)).ok()?;
        if bytes.len() % 4 != 0 {
            return None;
        }
        Some(
            bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        )
    }

    pub fn put(
        &self,
        fingerprint: &Fingerprint,
        content_hash: &str,
        embedding: &Embedding,
    ) -> Result<(), FeatureError> {
        let path = self.entry_path(fingerprint, content_hash);
        let parent = path.parent().expect("entry path has a parent");
        std::fs::create_dir_all(parent)
            .map_err(|e| FeatureError::BadInput(format!("cache: {e}")))?;
        let bytes: Vec<u8> = embedding
            .data
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let tmp = parent.join(format!(
            ".{}.tmp-{}",
            content_hash,
            std::process::id()
        ));
        std::fs::write(&tmp, &bytes).map_err(|e| FeatureError::BadInput(format!("cache: {e}")))?;
        std::fs::rename(&tmp, &path).map_err(|e| FeatureError::BadInput(format!("cache: {e}")))?;
        Ok(())
    }
}

/// Content hash of raw image bytes, for cache keys.
pub fn content_hash(bytes: &[u8]) -> String {
    Fingerprint::of_bytes(bytes).as_str().to_string()
}

impl EmbeddingCache {
    /// Convenience root from the environment, when configured.
    pub fn from_env(var: &str) -> Option<Self> {
        std::env::var_os(var).map(|root| Self::new(Path::new(&root).to_path_buf()))
    }
}
