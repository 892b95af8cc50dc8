//! CNN extractors with weights loaded from safetensors artifacts.
//!
//! The architecture is a plain conv chain: `convK` blocks of 3x3 (frames)
//! or 3x3x3 (clips) convolutions with ReLU, max-pooled by 2 between
//! blocks. Exposed layer activations are the post-ReLU, pre-pool block
//! outputs; the embedding is the final pooled output averaged over its
//! remaining spatial (and temporal) dimensions. Channel counts come from
//! the weights file, so the same loader serves tiny test fixtures and
//! full exported backbones.

use std::path::Path;

use image::RgbImage;
use rand::Rng;

use super::weights::{load_tensors, write_tensors, NamedTensor};
use super::{
    Activation, ClipExtractor, Embedding, FeatureError, FeatureSet, Fingerprint, FrameExtractor,
    Preprocess,
};
use crate::corpus::VideoClip;
use crate::rng;

struct ConvBlock {
    out_channels: usize,
    in_channels: usize,
    /// 3D kernels use `kt = 3`; 2D blocks use `kt = 1`.
    kt: usize,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

fn collect_blocks(
    tensors: &[NamedTensor],
    spatial_dims: usize,
    path: &Path,
) -> Result<Vec<ConvBlock>, FeatureError> {
    let mut blocks = Vec::new();
    for index in 1.. {
        let w_name = format!("conv{index}.weight");
        let b_name = format!("conv{index}.bias");
        let Some(weight) = tensors.iter().find(|t| t.name == w_name) else {
            break;
        };
        let bias = tensors
            .iter()
            .find(|t| t.name == b_name)
            .ok_or_else(|| FeatureError::Schema(format!("{}: missing {b_name}", path.display())))?;
        let expected_rank = 2 + spatial_dims; // out, in, (kt,) kh, kw
        if weight.shape.len() != expected_rank {
            return Err(FeatureError::Schema(format!(
                "{w_name}: rank {} weight, expected {expected_rank}",
                weight.shape.len()
            )));
        }
        let kernel = &weight.shape[2..];
        if kernel.iter().any(|&k| k != 3) {
            return Err(FeatureError::Schema(format!(
                "{w_name}: kernel {kernel:?}, expected all 3s"
            )));
        }
        let (out_c, in_c) = (weight.shape[0], weight.shape[1]);
        if bias.shape != vec![out_c] {
            return Err(FeatureError::Schema(format!(
                "{b_name}: shape {:?}, expected [{out_c}]",
                bias.shape
            )));
        }
        let expected_in = blocks
            .last()
            .map_or(3, |b: &ConvBlock| b.out_channels);
        if in_c != expected_in {
            return Err(FeatureError::Schema(format!(
                "{w_name}: input channels {in_c}, expected {expected_in}"
            )));
        }
        blocks.push(ConvBlock {
            out_channels: out_c,
            in_channels: in_c,
            kt: if spatial_dims == 3 { 3 } else { 1 },
            weight: weight.data.clone(),
            bias: bias.data.clone(),
        });
    }
    if blocks.is_empty() {
        return Err(FeatureError::Schema(format!(
            "{}: no conv1.weight tensor found",
            path.display()
        )));
    }
    Ok(blocks)
}

/// 3x3(x3) convolution with padding 1, stride 1, plus ReLU.
fn conv_relu(input: &Activation, block: &ConvBlock) -> Activation {
    assert_eq!(input.channels, block.in_channels);
    let (t_len, h, w) = (input.time, input.height, input.width);
    let mut out = Activation::zeros(block.out_channels, t_len, h, w);
    let k_positions = block.kt * 9;
    let half_t = (block.kt / 2) as i64;
    for oc in 0..block.out_channels {
        let w_base = oc * block.in_channels * k_positions;
        for t in 0..t_len {
            for y in 0..h {
                for x in 0..w {
                    let mut acc = block.bias[oc];
                    for ic in 0..block.in_channels {
                        let w_ic = w_base + ic * k_positions;
                        for kt in 0..block.kt {
                            let st = t as i64 + kt as i64 - half_t;
                            if st < 0 || st >= t_len as i64 {
                                continue;
                            }
                            for ky in 0..3usize {
                                let sy = y as i64 + ky as i64 - 1;
                                if sy < 0 || sy >= h as i64 {
                                    continue;
                                }
                                for kx in 0..3usize {
                                    let sx = x as i64 + kx as i64 - 1;
                                    if sx < 0 || sx >= w as i64 {
                                        continue;
                                    }
                                    let weight =
                                        block.weight[w_ic + (kt * 3 + ky) * 3 + kx];
                                    acc += weight
                                        * input.at(ic, st as usize, sy as usize, sx as usize);
                                }
                            }
                        }
                    }
                    *out.at_mut(oc, t, y, x) = acc.max(0.0);
                }
            }
        }
    }
    out
}

/// Max pool by 2 along every varying dimension (time included for 3D
/// blocks); dimensions of size 1 stay 1 and odd tails are absorbed.
fn max_pool(input: &Activation, pool_time: bool) -> Activation {
    let out_t = if pool_time {
        (input.time / 2).max(1)
    } else {
        input.time
    };
    let out_h = (input.height / 2).max(1);
    let out_w = (input.width / 2).max(1);
    let mut out = Activation::zeros(input.channels, out_t, out_h, out_w);
    for c in 0..input.channels {
        for t in 0..out_t {
            let (t0, t1) = pool_span(t, out_t, input.time, pool_time && input.time > 1);
            for y in 0..out_h {
                let (y0, y1) = pool_span(y, out_h, input.height, input.height > 1);
                for x in 0..out_w {
                    let (x0, x1) = pool_span(x, out_w, input.width, input.width > 1);
                    let mut best = f32::NEG_INFINITY;
                    for st in t0..t1 {
                        for sy in y0..y1 {
                            for sx in x0..x1 {
                                best = best.max(input.at(c, st, sy, sx));
                            }
                        }
                    }
                    *out.at_mut(c, t, y, x) = best;
                }
            }
        }
    }
    out
}

fn pool_span(index: usize, out_len: usize, in_len: usize, pooled: bool) -> (usize, usize) {
    if !pooled {
        return (index, index + 1);
    }
    let start = index * 2;
    let end = if index + 1 == out_len {
        in_len
    } else {
        start + 2
    };
    (start, end)
}

fn global_mean(input: &Activation) -> Vec<f32> {
    let positions = input.positions() as f64;
    (0..input.channels)
        .map(|c| {
            let base = c * input.positions();
            let sum: f64 = input.data[base..base + input.positions()]
                .iter()
                .map(|&v| v as f64)
                .sum();
            (sum / positions) as f32
        })
        .collect()
}

fn check_fingerprint(
    actual: &Fingerprint,
    expected: Option<&str>,
) -> Result<(), FeatureError> {
    if let Some(expected) = expected {
        if actual.as_str() != expected {
            return Err(FeatureError::FingerprintMismatch {
                expected: expected.to_string(),
                actual: actual.as_str().to_string(),
            });
        }
    }
    Ok(())
}

/// Frame CNN loaded from a safetensors artifact.
pub struct CnnFrameExtractor {
    name: String,
    preprocess: Preprocess,
    blocks: Vec<ConvBlock>,
    channels: Vec<usize>,
    fingerprint: Fingerprint,
}

impl CnnFrameExtractor {
    pub fn from_file(
        name: impl Into<String>,
        path: &Path,
        preprocess: Preprocess,
        expected_fingerprint: Option<&str>,
    ) -> Result<Self, FeatureError> {
        let (tensors, fingerprint) = load_tensors(path)?;
        check_fingerprint(&fingerprint, expected_fingerprint)?;
        let blocks = collect_blocks(&tensors, 2, path)?;
        Ok(Self {
            name: name.into(),
            preprocess,
            channels: blocks.iter().map(|b| b.out_channels).collect(),
            blocks,
            fingerprint,
        })
    }

    fn forward(&self, frame: &RgbImage) -> (Vec<Activation>, Activation) {
        let mut x = self.preprocess.apply(frame);
        let mut layers = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let pre_pool = conv_relu(&x, block);
            x = max_pool(&pre_pool, false);
            layers.push(pre_pool);
        }
        (layers, x)
    }
}

impl FrameExtractor for CnnFrameExtractor {
    fn name(&self) -> &str {
        &self.name
    }

    fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    fn preprocess(&self) -> &Preprocess {
        &self.preprocess
    }

    fn layer_channels(&self) -> &[usize] {
        &self.channels
    }

    fn embedding_len(&self) -> usize {
        *self.channels.last().unwrap()
    }

    fn features(&self, frame: &RgbImage) -> Result<FeatureSet, FeatureError> {
        let (layers, _) = self.forward(frame);
        Ok(FeatureSet {
            layers,
            fingerprint: self.fingerprint.clone(),
        })
    }

    fn embed(&self, frame: &RgbImage) -> Result<Embedding, FeatureError> {
        let (_, pooled) = self.forward(frame);
        Ok(Embedding {
            data: global_mean(&pooled),
            pooling: "final pool output, global mean over h,w",
        })
    }
}

/// Spatiotemporal CNN loaded from a safetensors artifact. PVCS requires
/// the perceptual-video variant with exactly five blocks; depth is
/// validated at the metric call site.
pub struct CnnClipExtractor {
    name: String,
    preprocess: Preprocess,
    window: usize,
    blocks: Vec<ConvBlock>,
    channels: Vec<usize>,
    fingerprint: Fingerprint,
}

impl CnnClipExtractor {
    pub fn from_file(
        name: impl Into<String>,
        path: &Path,
        preprocess: Preprocess,
        expected_fingerprint: Option<&str>,
    ) -> Result<Self, FeatureError> {
        let (tensors, fingerprint) = load_tensors(path)?;
        check_fingerprint(&fingerprint, expected_fingerprint)?;
        let blocks = collect_blocks(&tensors, 3, path)?;
        Ok(Self {
            name: name.into(),
            preprocess,
            window: 10,
            channels: blocks.iter().map(|b| b.out_channels).collect(),
            blocks,
            fingerprint,
        })
    }

    fn volume(&self, frames: &[RgbImage]) -> Activation {
        let (w, h) = (
            self.preprocess.width as usize,
            self.preprocess.height as usize,
        );
        let mut volume = Activation::zeros(3, frames.len(), h, w);
        for (t, frame) in frames.iter().enumerate() {
            let single = self.preprocess.apply(frame);
            for c in 0..3 {
                for y in 0..h {
                    for x in 0..w {
                        *volume.at_mut(c, t, y, x) = single.at(c, 0, y, x);
                    }
                }
            }
        }
        volume
    }

    fn forward(&self, frames: &[RgbImage]) -> (Vec<Activation>, Activation) {
        let mut x = self.volume(frames);
        let mut layers = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let pre_pool = conv_relu(&x, block);
            x = max_pool(&pre_pool, true);
            layers.push(pre_pool);
        }
        (layers, x)
    }
}

impl ClipExtractor for CnnClipExtractor {
    fn name(&self) -> &str {
        &self.name
    }

    fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    fn preprocess(&self) -> &Preprocess {
        &self.preprocess
    }

    fn window(&self) -> usize {
        self.window
    }

    fn layer_channels(&self) -> &[usize] {
        &self.channels
    }

    fn embedding_len(&self) -> usize {
        *self.channels.last().unwrap()
    }

    fn features(&self, frames: &[RgbImage]) -> Result<FeatureSet, FeatureError> {
        if frames.len() != self.window {
            return Err(FeatureError::WrongClipLength {
                expected: self.window,
                got: frames.len(),
            });
        }
        let (layers, _) = self.forward(frames);
        Ok(FeatureSet {
            layers,
            fingerprint: self.fingerprint.clone(),
        })
    }

    fn embed_video(&self, clip: &VideoClip) -> Result<Embedding, FeatureError> {
        if clip.is_empty() {
            return Err(FeatureError::BadInput("empty video".into()));
        }
        let (_, pooled) = self.forward(&clip.frames);
        Ok(Embedding {
            data: global_mean(&pooled),
            pooling: "final pool output, global mean over t,h,w",
        })
    }
}

/// Writes a seeded random conv chain as a safetensors fixture: a small but
/// genuine CNN for exercising the weights-file code path without shipping
/// pretrained backbones. `spatial_dims` is 2 for frame extractors, 3 for
/// clip extractors.
pub fn write_seeded_cnn_fixture(
    path: &Path,
    seed: u64,
    channels: &[usize],
    spatial_dims: usize,
) -> Result<Fingerprint, FeatureError> {
    assert!(matches!(spatial_dims, 2 | 3));
    let mut tensors = Vec::new();
    let mut in_c = 3usize;
    let kt = if spatial_dims == 3 { 3 } else { 1 };
    for (i, &out_c) in channels.iter().enumerate() {
        let mut stream = rng::stream(seed, &format!("cnn-fixture.conv{}", i + 1));
        let fan_in = (in_c * kt * 9) as f32;
        let scale = fan_in.sqrt().recip();
        let weight: Vec<f32> = (0..out_c * in_c * kt * 9)
            .map(|_| stream.random_range(-scale..scale))
            .collect();
        let bias: Vec<f32> = (0..out_c).map(|_| stream.random_range(-0.05..0.05)).collect();
        let mut shape = vec![out_c, in_c];
        if spatial_dims == 3 {
            shape.push(3);
        }
        shape.extend([3, 3]);
        tensors.push(NamedTensor::new(format!("conv{}.weight", i + 1), shape, weight));
        tensors.push(NamedTensor::new(format!("conv{}.bias", i + 1), vec![out_c], bias));
        in_c = out_c;
    }
    write_tensors(path, &tensors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{noise_frame, solid_frame};

    #[test]
    fn frame_cnn_loads_and_extracts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.safetensors");
        let fp = write_seeded_cnn_fixture(&path, 1, &[6, 8, 12], 2).unwrap();
        let ext =
            CnnFrameExtractor::from_file("fixture", &path, Preprocess::plain(32), Some(fp.as_str()))
                .unwrap();
        assert_eq!(ext.layer_channels(), &[6, 8, 12]);
        assert_eq!(ext.embedding_len(), 12);

        let frame = noise_frame(48, 48, 3);
        let a = ext.features(&frame).unwrap();
        let b = ext.features(&frame).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.layers.len(), 3);
        // Pre-pool layer sizes: 32, 16, 8.
        assert_eq!(a.layers[0].shape(), (6, 1, 32, 32));
        assert_eq!(a.layers[1].shape(), (8, 1, 16, 16));
        assert_eq!(a.layers[2].shape(), (12, 1, 8, 8));
        let e = ext.embed(&frame).unwrap();
        assert_eq!(e.data.len(), 12);
    }

    #[test]
    fn fingerprint_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.safetensors");
        write_seeded_cnn_fixture(&path, 1, &[4], 2).unwrap();
        let result = CnnFrameExtractor::from_file(
            "fixture",
            &path,
            Preprocess::plain(16),
            Some("deadbeef"),
        );
        assert!(matches!(
            result.err(),
            Some(FeatureError::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn clip_cnn_window_and_video_embedding() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.safetensors");
        let fp = write_seeded_cnn_fixture(&path, 2, &[4, 6, 8, 10, 12], 3).unwrap();
        let ext = CnnClipExtractor::from_file(
            "fixture3d",
            &path,
            Preprocess::plain(16),
            Some(fp.as_str()),
        )
        .unwrap();
        assert_eq!(ext.layer_channels().len(), 5);

        let frames = vec![solid_frame(20, 20, [10, 20, 30]); 10];
        let set = ext.features(&frames).unwrap();
        assert_eq!(set.layers.len(), 5);
        assert_eq!(set.layers[0].shape(), (4, 10, 16, 16));

        assert!(matches!(
            ext.features(&frames[..9]),
            Err(FeatureError::WrongClipLength { .. })
        ));

        // Videos of arbitrary length embed through temporal pooling.
        let clip =
            crate::corpus::VideoClip::new("v", vec![noise_frame(20, 20, 5); 13]).unwrap();
        let e = ext.embed_video(&clip).unwrap();
        assert_eq!(e.data.len(), 12);
    }

    #[test]
    fn zero_input_passes_biases_through_relu() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.safetensors");
        write_seeded_cnn_fixture(&path, 7, &[5], 2).unwrap();
        let ext =
            CnnFrameExtractor::from_file("one", &path, Preprocess::plain(8), None).unwrap();
        let set = ext.features(&solid_frame(8, 8, [0, 0, 0])).unwrap();
        // Interior positions of a zero input see only the bias (ReLU-ed).
        let (tensors, _) = load_tensors(&path).unwrap();
        let bias = &tensors.iter().find(|t| t.name == "conv1.bias").unwrap().data;
        let acts = &set.layers[0];
        for c in 0..5 {
            assert_eq!(acts.at(c, 0, 4, 4), bias[c].max(0.0));
        }
    }
}
