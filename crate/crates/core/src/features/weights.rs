//! Weight artifact I/O in the safetensors interchange format.
//!
//! Extractors address weights files by content fingerprint; tensors are
//! f32 and named by convention (`conv1.weight`, `conv1.bias`, ... for CNN
//! extractors, `lin0.weight`, ... for perceptual calibration weights).

use std::path::Path;

use safetensors::tensor::{Dtype, TensorView};
use safetensors::SafeTensors;

use super::{FeatureError, Fingerprint};

/// An f32 tensor with its name and shape.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f32>) -> Self {
        let tensor = Self {
            name: name.into(),
            shape,
            data,
        };
        assert_eq!(
            tensor.shape.iter().product::<usize>(),
            tensor.data.len(),
            "shape/data mismatch for {}",
            tensor.name
        );
        tensor
    }
}

/// Loads every tensor from a safetensors file, returning the fingerprint
/// of the raw bytes alongside.
pub fn load_tensors(path: &Path) -> Result<(Vec<NamedTensor>, Fingerprint), FeatureError> {
    let bytes = std::fs::read(path)
        .map_err(|e| FeatureError::WeightsLoad(format!("{}: {e}", path.display())))?;
    let fingerprint = Fingerprint::of_bytes(&bytes);
    let parsed = SafeTensors::deserialize(&bytes)
        .map_err(|e| FeatureError::WeightsLoad(format!("{}: {e}", path.display())))?;
    let mut tensors = Vec::new();
    for (name, view) in parsed.tensors() {
        if view.dtype() != Dtype::F32 {
            return Err(FeatureError::WeightsLoad(format!(
                "{name}: dtype {:?} unsupported, expected F32",
                view.dtype()
            )));
        }
        let data = view
            .data()
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        tensors.push(NamedTensor {
            name,
            shape: view.shape().to_vec(),
            data,
        });
    }
    tensors.sort_by(|a, b| a.name.cmp(&b.name));
    Ok((tensors, fingerprint))
}

/// Writes tensors as a safetensors file and returns its fingerprint.
pub fn write_tensors(path: &Path, tensors: &[NamedTensor]) -> Result<Fingerprint, FeatureError> {
    let byte_buffers: Vec<Vec<u8>> = tensors
        .iter()
        .map(|t| t.data.iter().flat_map(|v| v.to_le_bytes()).collect())
        .collect();
    let views: Vec<(String, TensorView)> = tensors
        .iter()
        .zip(&byte_buffers)
        .map(|(t, bytes)| {
            TensorView::new(Dtype::F32, t.shape.clone(), bytes)
                .map(|view| (t.name.clone(), view))
                .map_err(|e| FeatureError::WeightsLoad(format!("{}: {e}", t.name)))
        })
        .collect::<Result<_, _>>()?;
    let blob = safetensors::serialize(views, None)
        .map_err(|e| FeatureError::WeightsLoad(e.to_string()))?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| FeatureError::WeightsLoad(format!("{}: {e}", path.display())))?;
    }
    std::fs::write(path, &blob)
        .map_err(|e| FeatureError::WeightsLoad(format!("{}: {e}", path.display())))?;
    Ok(Fingerprint::of_bytes(&blob))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.safetensors");
        let tensors = vec![
            NamedTensor::new("conv1.bias", vec![2], vec![0.5, -1.5]),
            NamedTensor::new("conv1.weight", vec![2, 3, 1, 1], (0..6).map(|v| v as f32).collect()),
        ];
        let written = write_tensors(&path, &tensors).unwrap();
        let (loaded, read_back) = load_tensors(&path).unwrap();
        assert_eq!(written, read_back);
        assert_eq!(loaded, tensors);
    }

    #[test]
    fn corrupt_file_reports_load_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.safetensors");
        std::fs::write(&path, b"not a tensor file").unwrap();
        assert!(matches!(
            load_tensors(&path),
            Err(FeatureError::WeightsLoad(_))
        ));
    }
}
