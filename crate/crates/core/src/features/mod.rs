//! Pluggable deep feature extraction backing the learned metrics.
//!
//! Two extractor families implement the same interfaces: a toy extractor
//! built from seeded linear maps (no weights file, every metric testable
//! offline) and CNN extractors whose weights load from safetensors files
//! and are addressed by fingerprint. Frame extractors serve LPIPS and FID;
//! clip extractors serve PVCS and VFID.

mod cache;
mod cnn;
mod toy;
mod weights;

pub use cache::EmbeddingCache;
pub use cnn::{CnnClipExtractor, CnnFrameExtractor};
pub use toy::{ToyClipExtractor, ToyFrameExtractor};
pub use weights::{load_tensors, write_tensors, NamedTensor};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::corpus::VideoClip;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("weights load failed: {0}")]
    WeightsLoad(String),
    #[error("fingerprint mismatch: expected {expected}, file has {actual}")]
    FingerprintMismatch { expected: String, actual: String },
    #[error("bad extractor schema: {0}")]
    Schema(String),
    #[error("clip extractor needs exactly {expected} frames, got {got}")]
    WrongClipLength { expected: usize, got: usize },
    #[error("bad input: {0}")]
    BadInput(String),
}

/// Content hash identifying a weights artifact (or, for the toy extractor,
/// its generation descriptor). Changes iff the underlying bytes change.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint(String);

impl Fingerprint {
    pub fn of_bytes(bytes: &[u8]) -> Self {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(bytes);
        Fingerprint(
            digest
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect::<String>(),
        )
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// A dense activation tensor with channel-major `[c][t][h][w]` layout;
/// frame features use `time == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    pub channels: usize,
    pub time: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Activation {
    pub fn zeros(channels: usize, time: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            time,
            height,
            width,
            data: vec![0.0; channels * time * height * width],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.channels, self.time, self.height, self.width)
    }

    /// Spatial (and temporal) positions per channel.
    pub fn positions(&self) -> usize {
        self.time * self.height * self.width
    }

    #[inline]
    pub fn at(&self, c: usize, t: usize, y: usize, x: usize) -> f32 {
        self.data[((c * self.time + t) * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn at_mut(&mut self, c: usize, t: usize, y: usize, x: usize) -> &mut f32 {
        &mut self.data[((c * self.time + t) * self.height + y) * self.width + x]
    }
}

/// Multi-layer activations plus the fingerprint that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub layers: Vec<Activation>,
    pub fingerprint: Fingerprint,
}

/// A pooled fixed-length embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub data: Vec<f32>,
    /// How the vector was pooled, e.g. `global mean over h,w`.
    pub pooling: &'static str,
}

/// Input preprocessing declared per extractor: resize then per-channel
/// normalization of 0..1 values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub width: u32,
    pub height: u32,
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl Preprocess {
    /// Unit scaling at a square working resolution.
    pub fn plain(side: u32) -> Self {
        Self {
            width: side,
            height: side,
            mean: [0.0; 3],
            std: [1.0; 3],
        }
    }

    /// Resizes (bilinear) and normalizes a frame into a 3-channel tensor.
    pub fn apply(&self, frame: &RgbImage) -> Activation {
        let resized = if frame.dimensions() == (self.width, self.height) {
            frame.clone()
        } else {
            image::imageops::resize(
                frame,
                self.width,
                self.height,
                image::imageops::FilterType::Triangle,
            )
        };
        let (w, h) = (self.width as usize, self.height as usize);
        let mut out = Activation::zeros(3, 1, h, w);
        for (y, row) in resized.rows().enumerate() {
            for (x, px) in row.enumerate() {
                for c in 0..3 {
                    let v = px.0[c] as f32 / 255.0;
                    *out.at_mut(c, 0, y, x) = (v - self.mean[c]) / self.std[c];
                }
            }
        }
        out
    }
}

/// Per-frame multi-layer features and pooled frame embeddings.
pub trait FrameExtractor: Send + Sync {
    fn name(&self) -> &str;
    fn fingerprint(&self) -> &Fingerprint;
    fn preprocess(&self) -> &Preprocess;
    /// Channel counts per layer, fixed for the extractor's lifetime.
    fn layer_channels(&self) -> &[usize];
    fn embedding_len(&self) -> usize;
    fn features(&self, frame: &RgbImage) -> Result<FeatureSet, FeatureError>;
    fn embed(&self, frame: &RgbImage) -> Result<Embedding, FeatureError>;
}

/// Spatiotemporal features over fixed-length windows and pooled video
/// embeddings over whole clips.
pub trait ClipExtractor: Send + Sync {
    fn name(&self) -> &str;
    fn fingerprint(&self) -> &Fingerprint;
    fn preprocess(&self) -> &Preprocess;
    /// Native window length consumed by `features` (10 frames).
    fn window(&self) -> usize;
    fn layer_channels(&self) -> &[usize];
    fn embedding_len(&self) -> usize;
    /// Multi-layer features of exactly `window()` frames.
    fn features(&self, frames: &[RgbImage]) -> Result<FeatureSet, FeatureError>;
    /// Whole-video embedding: activations pooled over space and time.
    fn embed_video(&self, clip: &VideoClip) -> Result<Embedding, FeatureError>;
}

/// Area-average pooling of a 3D grid onto a smaller grid; each output cell
/// averages its (fractional) input region. Linear in the input.
pub(crate) fn adaptive_pool(
    input: &Activation,
    time: usize,
    height: usize,
    width: usize,
) -> Activation {
    let mut out = Activation::zeros(input.channels, time, height, width);
    for c in 0..input.channels {
        for ot in 0..time {
            let (t0, t1) = span(ot, time, input.time);
            for oy in 0..height {
                let (y0, y1) = span(oy, height, input.height);
                for ox in 0..width {
                    let (x0, x1) = span(ox, width, input.width);
                    let mut acc = 0.0f64;
                    let mut weight = 0.0f64;
                    for t in t0.floor() as usize..(t1.ceil() as usize).min(input.time) {
                        let wt = overlap(t as f64, t as f64 + 1.0, t0, t1);
                        for y in y0.floor() as usize..(y1.ceil() as usize).min(input.height) {
                            let wy = overlap(y as f64, y as f64 + 1.0, y0, y1);
                            for x in x0.floor() as usize..(x1.ceil() as usize).min(input.width) {
                                let wx = overlap(x as f64, x as f64 + 1.0, x0, x1);
                                let w = wt * wy * wx;
                                acc += w * input.at(c, t, y, x) as f64;
                                weight += w;
                            }
                        }
                    }
                    *out.at_mut(c, ot, oy, ox) = (acc / weight) as f32;
                }
            }
        }
    }
    out
}

fn span(index: usize, out_len: usize, in_len: usize) -> (f64, f64) {
    let scale = in_len as f64 / out_len as f64;
    (index as f64 * scale, (index + 1) as f64 * scale)
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}
