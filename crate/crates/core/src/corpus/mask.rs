//! Binary occlusion masks and their on-disk containers.
//!
//! In memory a mask frame stores one byte per pixel, strictly 0 (known) or
//! 1 (occluded). On disk a sequence is either a directory of bilevel PNGs
//! (0 = known, 255 = occluded) with a sidecar metadata file, or a single
//! run-length-encoded container (`.mrle`).

use std::io::{Read, Write};
use std::path::Path;

use image::GrayImage;
use serde::{Deserialize, Serialize};

use super::label::LabelSet;
use super::CorpusError;

/// One binary mask frame; `data[y * width + x]` is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskFrame {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl MaskFrame {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; (width * height) as usize],
        }
    }

    /// Wraps raw per-pixel data, rejecting any value other than 0 or 1.
    pub fn from_data(width: u32, height: u32, data: Vec<u8>) -> Result<Self, CorpusError> {
        if data.len() != (width * height) as usize {
            return Err(CorpusError::Validation(format!(
                "mask frame data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(CorpusError::Validation(
                "mask frame contains non-binary values".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        debug_assert!(v <= 1);
        self.data[(y * self.width + x) as usize] = v;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Number of occluded pixels.
    pub fn area(&self) -> u64 {
        self.data.iter().map(|&v| v as u64).sum()
    }

    /// Centroid of occluded pixel centers, or None for an empty frame.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let mut n = 0u64;
        let mut sx = 0u64;
        let mut sy = 0u64;
        for y in 0..self.height {
            let row = &self.data[(y * self.width) as usize..((y + 1) * self.width) as usize];
            for (x, &v) in row.iter().enumerate() {
                if v != 0 {
                    n += 1;
                    sx += x as u64;
                    sy += y as u64;
                }
            }
        }
        if n == 0 {
            None
        } else {
            Some((sx as f64 / n as f64 + 0.5, sy as f64 / n as f64 + 0.5))
        }
    }

    /// Converts to an 8-bit image with 0/255 values for storage.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_vec(
            self.width,
            self.height,
            self.data.iter().map(|&v| v * 255).collect(),
        )
        .unwrap()
    }

    /// Reads a stored bilevel image; any nonzero pixel is occluded.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.as_raw().iter().map(|&v| u8::from(v > 0)).collect(),
        }
    }
}

/// A per-frame binary occlusion volume with its generation provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSequence {
    pub id: String,
    pub frames: Vec<MaskFrame>,
    pub seed: Option<u64>,
    pub labels: LabelSet,
}

impl MaskSequence {
    pub fn new(id: impl Into<String>, frames: Vec<MaskFrame>) -> Result<Self, CorpusError> {
        let id = id.into();
        let Some(first) = frames.first() else {
            return Err(CorpusError::Validation(format!("mask {id}: no frames")));
        };
        let (w, h) = (first.width, first.height);
        for (i, f) in frames.iter().enumerate() {
            if (f.width, f.height) != (w, h) {
                return Err(CorpusError::Validation(format!(
                    "mask {id}: frame {i} is {}x{}, expected {w}x{h}",
                    f.width, f.height
                )));
            }
        }
        Ok(Self {
            id,
            frames,
            seed: None,
            labels: LabelSet::new(),
        })
    }

    pub fn width(&self) -> u32 {
        self.frames[0].width
    }

    pub fn height(&self) -> u32 {
        self.frames[0].height
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Checks that this mask is aligned with a clip of the given shape.
    pub fn check_paired(&self, width: u32, height: u32, length: usize) -> Result<(), CorpusError> {
        if self.width() != width || self.height() != height || self.len() != length {
            return Err(CorpusError::Validation(format!(
                "mask {} is {}x{}x{}, paired clip needs {width}x{height}x{length}",
                self.id,
                self.width(),
                self.height(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Saves as a directory of bilevel PNGs plus a `mask.toml` sidecar.
    pub fn save_dir(&self, dir: &Path) -> Result<(), CorpusError> {
        std::fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
        for (i, frame) in self.frames.iter().enumerate() {
            let path = dir.join(format!("frame_{i:05}.png"));
            frame
                .to_gray()
                .save(&path)
                .map_err(|e| CorpusError::Validation(format!("{}: {e}", path.display())))?;
        }
        let meta = MaskSidecar {
            id: self.id.clone(),
            length: self.len(),
            seed: self.seed,
            labels: self.labels.iter().collect(),
        };
        let text = toml::to_string_pretty(&meta)
            .map_err(|e| CorpusError::Validation(format!("mask sidecar: {e}")))?;
        std::fs::write(dir.join("mask.toml"), text).map_err(|e| CorpusError::io(dir, e))
    }

    pub fn load_dir(dir: &Path) -> Result<Self, CorpusError> {
        let sidecar_path = dir.join("mask.toml");
        let text = std::fs::read_to_string(&sidecar_path).map_err(|e| CorpusError::io(dir, e))?;
        let meta: MaskSidecar = toml::from_str(&text).map_err(|e| CorpusError::Parse {
            path: sidecar_path.display().to_string(),
            detail: e.to_string(),
        })?;
        let mut frames = Vec::with_capacity(meta.length);
        for i in 0..meta.length {
            let path = dir.join(format!("frame_{i:05}.png"));
            let img = image::open(&path)
                .map_err(|e| CorpusError::Validation(format!("{}: {e}", path.display())))?
                .into_luma8();
            frames.push(MaskFrame::from_gray(&img));
        }
        let mut seq = MaskSequence::new(meta.id, frames)?;
        seq.seed = meta.seed;
        for label in meta.labels {
            seq.labels.insert(label)?;
        }
        Ok(seq)
    }

    /// Saves as a single run-length-encoded container.
    pub fn save_rle(&self, path: &Path) -> Result<(), CorpusError> {
        let mut out = Vec::new();
        out.extend_from_slice(RLE_MAGIC);
        write_u32(&mut out, RLE_VERSION);
        write_u32(&mut out, self.width());
        write_u32(&mut out, self.height());
        write_u32(&mut out, self.len() as u32);
        for frame in &self.frames {
            // Runs alternate starting with the count of 0s.
            let mut runs: Vec<u32> = Vec::new();
            let mut current = 0u8;
            let mut run = 0u32;
            for &v in &frame.data {
                if v == current {
                    run += 1;
                } else {
                    runs.push(run);
                    current = v;
                    run = 1;
                }
            }
            runs.push(run);
            write_u32(&mut out, runs.len() as u32);
            for r in runs {
                write_u32(&mut out, r);
            }
        }
        let mut file = std::fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
        file.write_all(&out).map_err(|e| CorpusError::io(path, e))
    }

    pub fn load_rle(id: impl Into<String>, path: &Path) -> Result<Self, CorpusError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| CorpusError::io(path, e))?;
        let mut cursor = 0usize;
        let magic = take(&mut cursor, &bytes, RLE_MAGIC.len(), path)?;
        if magic != RLE_MAGIC {
            return Err(CorpusError::Parse {
                path: path.display().to_string(),
                detail: "bad magic".into(),
            });
        }
        let version = read_u32(&mut cursor, &bytes, path)?;
        if version != RLE_VERSION {
            return Err(CorpusError::Parse {
                path: path.display().to_string(),
                detail: format!("unsupported container version {version}"),
            });
        }
        let width = read_u32(&mut cursor, &bytes, path)?;
        let height = read_u32(&mut cursor, &bytes, path)?;
        let length = read_u32(&mut cursor, &bytes, path)?;
        let pixels = (width as usize) * (height as usize);
        let mut frames = Vec::with_capacity(length as usize);
        for t in 0..length {
            let n_runs = read_u32(&mut cursor, &bytes, path)?;
            let mut data = Vec::with_capacity(pixels);
            let mut value = 0u8;
            for _ in 0..n_runs {
                let run = read_u32(&mut cursor, &bytes, path)? as usize;
                data.extend(std::iter::repeat_n(value, run));
                value ^= 1;
            }
            if data.len() != pixels {
                return Err(CorpusError::Parse {
                    path: path.display().to_string(),
                    detail: format!("frame {t}: {} pixels, expected {pixels}", data.len()),
                });
            }
            frames.push(MaskFrame {
                width,
                height,
                data,
            });
        }
        MaskSequence::new(id, frames)
    }
}

const RLE_MAGIC: &[u8] = b"MRLE";
const RLE_VERSION: u32 = 1;

fn write_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn take<'a>(
    cursor: &mut usize,
    bytes: &'a [u8],
    n: usize,
    path: &Path,
) -> Result<&'a [u8], CorpusError> {
    let end = *cursor + n;
    if end > bytes.len() {
        return Err(CorpusError::Parse {
            path: path.display().to_string(),
            detail: "truncated container".into(),
        });
    }
    let slice = &bytes[*cursor..end];
    *cursor = end;
    Ok(slice)
}

fn read_u32(cursor: &mut usize, bytes: &[u8], path: &Path) -> Result<u32, CorpusError> {
    let slice = take(cursor, bytes, 4, path)?;
    Ok(u32::from_le_bytes(slice.try_into().unwrap()))
}

#[derive(Debug, Serialize, Deserialize)]
struct MaskSidecar {
    id: String,
    length: usize,
    seed: Option<u64>,
    #[serde(default)]
    labels: Vec<super::label::AttributeLabel>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn checkerboard(w: u32, h: u32, phase: u32) -> MaskFrame {
        let data = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                ((x + y + phase) % 2) as u8
            })
            .collect();
        MaskFrame::from_data(w, h, data).unwrap()
    }

    #[test]
    fn rejects_non_binary() {
        assert!(MaskFrame::from_data(2, 2, vec![0, 1, 2, 0]).is_err());
    }

    #[test]
    fn centroid_of_single_pixel() {
        let mut f = MaskFrame::empty(10, 10);
        f.set(3, 7, 1);
        assert_eq!(f.centroid(), Some((3.5, 7.5)));
    }

    #[test]
    fn dir_container_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut seq =
            MaskSequence::new("m0", vec![checkerboard(6, 4, 0), checkerboard(6, 4, 1)]).unwrap();
        seq.seed = Some(99);
        seq.labels.insert("fg_size:low".parse().unwrap()).unwrap();
        seq.save_dir(dir.path()).unwrap();
        let loaded = MaskSequence::load_dir(dir.path()).unwrap();
        assert_eq!(loaded, seq);
    }

    proptest! {
        #[test]
        fn rle_round_trip(frames in prop::collection::vec(
            prop::collection::vec(0u8..=1, 24), 1..5)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.mrle");
            let frames: Vec<_> = frames
                .into_iter()
                .map(|d| MaskFrame::from_data(6, 4, d).unwrap())
                .collect();
            let seq = MaskSequence::new("m", frames).unwrap();
            seq.save_rle(&path).unwrap();
            let loaded = MaskSequence::load_rle("m", &path).unwrap();
            prop_assert_eq!(loaded.frames, seq.frames);
        }
    }
}
