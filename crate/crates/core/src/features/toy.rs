//! Toy extractors: fixed seeded random linear maps behind the standard
//! extractor interfaces, so every metric is testable with no weights file
//! present. Each layer pools the preprocessed input onto its own grid and
//! mixes the three color channels with a seeded linear map; both steps are
//! linear, so outputs stay analytically computable.

use image::RgbImage;
use rand::Rng;

use super::{
    adaptive_pool, Activation, ClipExtractor, Embedding, FeatureError, FeatureSet, FrameExtractor,
    Preprocess,
};
use crate::corpus::VideoClip;
use crate::rng;

/// A seeded `out x 3` channel mix with bias.
#[derive(Debug, Clone)]
struct ChannelMix {
    out: usize,
    weights: Vec<f32>, // out x 3 row-major
    bias: Vec<f32>,
}

impl ChannelMix {
    fn seeded(seed: u64, tag: &str, out: usize) -> Self {
        let mut stream = rng::stream(seed, tag);
        let scale = (3.0f32).sqrt().recip();
        let weights = (0..out * 3)
            .map(|_| stream.random_range(-scale..scale))
            .collect();
        let bias = (0..out).map(|_| stream.random_range(-0.1..0.1)).collect();
        Self { out, weights, bias }
    }

    /// Applies the mix at every position of a 3-channel grid.
    fn apply(&self, pooled: &Activation) -> Activation {
        assert_eq!(pooled.channels, 3);
        let positions = pooled.positions();
        let mut out = Activation::zeros(self.out, pooled.time, pooled.height, pooled.width);
        for c in 0..self.out {
            for p in 0..positions {
                let mut acc = self.bias[c];
                for i in 0..3 {
                    acc += self.weights[c * 3 + i] * pooled.data[i * positions + p];
                }
                out.data[c * positions + p] = acc;
            }
        }
        out
    }
}

/// Per-layer output grids of the toy frame extractor.
const FRAME_LAYERS: [(usize, usize, usize); 3] = [(8, 8, 8), (12, 4, 4), (16, 2, 2)];
const FRAME_EMBED_LEN: usize = 32;

pub struct ToyFrameExtractor {
    seed: u64,
    preprocess: Preprocess,
    layers: Vec<ChannelMix>,
    embed: ChannelMix,
    channels: Vec<usize>,
    fingerprint: super::Fingerprint,
}

impl ToyFrameExtractor {
    pub fn new(seed: u64) -> Self {
        let layers: Vec<ChannelMix> = FRAME_LAYERS
            .iter()
            .enumerate()
            .map(|(i, (c, _, _))| ChannelMix::seeded(seed, &format!("toy.frame.layer{i}"), *c))
            .collect();
        let embed = ChannelMix::seeded(seed, "toy.frame.embed", FRAME_EMBED_LEN);
        let descriptor = format!("toy-frame:v1:seed={seed}:layers={FRAME_LAYERS:?}");
        Self {
            seed,
            preprocess: Preprocess::plain(32),
            channels: layers.iter().map(|l| l.out).collect(),
            layers,
            embed,
            fingerprint: super::Fingerprint::of_bytes(descriptor.as_bytes()),
        }
    }

    /// The layer weights as flat vectors, for hand-computing expected
    /// metric values in tests.
    pub fn layer_mix(&self, layer: usize) -> (&[f32], &[f32]) {
        (&self.layers[layer].weights, &self.layers[layer].bias)
    }

    pub fn embed_mix(&self) -> (&[f32], &[f32]) {
        (&self.embed.weights, &self.embed.bias)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl FrameExtractor for ToyFrameExtractor {
    fn name(&self) -> &str {
        "toy-frame"
    }

    fn fingerprint(&self) -> &super::Fingerprint {
        &self.fingerprint
    }

    fn preprocess(&self) -> &Preprocess {
        &self.preprocess
    }

    fn layer_channels(&self) -> &[usize] {
        &self.channels
    }

    fn embedding_len(&self) -> usize {
        FRAME_EMBED_LEN
    }

    fn features(&self, frame: &RgbImage) -> Result<FeatureSet, FeatureError> {
        let input = self.preprocess.apply(frame);
        let layers = FRAME_LAYERS
            .iter()
            .zip(&self.layers)
            .map(|((_, h, w), mix)| mix.apply(&adaptive_pool(&input, 1, *h, *w)))
            .collect();
        Ok(FeatureSet {
            layers,
            fingerprint: self.fingerprint.clone(),
        })
    }

    fn embed(&self, frame: &RgbImage) -> Result<Embedding, FeatureError> {
        let input = self.preprocess.apply(frame);
        let pooled = adaptive_pool(&input, 1, 1, 1);
        Ok(Embedding {
            data: self.embed.apply(&pooled).data,
            pooling: "global mean over h,w then seeded channel mix",
        })
    }
}

/// Per-layer output grids (c, t, h, w) of the toy clip extractor: five
/// layers, mirroring the perceptual-video extractor's schema.
const CLIP_LAYERS: [(usize, usize, usize, usize); 5] = [
    (6, 8, 8, 8),
    (8, 6, 6, 6),
    (10, 4, 4, 4),
    (12, 2, 2, 2),
    (16, 1, 2, 2),
];
const CLIP_WINDOW: usize = 10;
const CLIP_EMBED_LEN: usize = 32;

pub struct ToyClipExtractor {
    preprocess: Preprocess,
    layers: Vec<ChannelMix>,
    embed: ChannelMix,
    channels: Vec<usize>,
    fingerprint: super::Fingerprint,
}

impl ToyClipExtractor {
    pub fn new(seed: u64) -> Self {
        let layers: Vec<ChannelMix> = CLIP_LAYERS
            .iter()
            .enumerate()
            .map(|(i, (c, _, _, _))| ChannelMix::seeded(seed, &format!("toy.clip.layer{i}"), *c))
            .collect();
        let embed = ChannelMix::seeded(seed, "toy.clip.embed", CLIP_EMBED_LEN);
        let descriptor = format!("toy-clip:v1:seed={seed}:layers={CLIP_LAYERS:?}");
        Self {
            preprocess: Preprocess::plain(16),
            channels: layers.iter().map(|l| l.out).collect(),
            layers,
            embed,
            fingerprint: super::Fingerprint::of_bytes(descriptor.as_bytes()),
        }
    }

    pub fn embed_mix(&self) -> (&[f32], &[f32]) {
        (&self.embed.weights, &self.embed.bias)
    }

    /// Stacks per-frame preprocessed tensors into one (3, t, h, w) volume.
    fn volume(&self, frames: &[RgbImage]) -> Activation {
        let (w, h) = (
            self.preprocess.width as usize,
            self.preprocess.height as usize,
        );
        let t_len = frames.len();
        let mut volume = Activation::zeros(3, t_len, h, w);
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
}

impl ClipExtractor for ToyClipExtractor {
    fn name(&self) -> &str {
        "toy-clip"
    }

    fn fingerprint(&self) -> &super::Fingerprint {
        &self.fingerprint
    }

    fn preprocess(&self) -> &Preprocess {
        &self.preprocess
    }

    fn window(&self) -> usize {
        CLIP_WINDOW
    }

    fn layer_channels(&self) -> &[usize] {
        &self.channels
    }

    fn embedding_len(&self) -> usize {
        CLIP_EMBED_LEN
    }

    fn features(&self, frames: &[RgbImage]) -> Result<FeatureSet, FeatureError> {
        if frames.len() != CLIP_WINDOW {
            return Err(FeatureError::WrongClipLength {
                expected: CLIP_WINDOW,
                got: frames.len(),
            });
        }
        let volume = self.volume(frames);
        let layers = CLIP_LAYERS
            .iter()
            .zip(&self.layers)
            .map(|((_, t, h, w), mix)| mix.apply(&adaptive_pool(&volume, *t, *h, *w)))
            .collect();
        Ok(FeatureSet {
            layers,
            fingerprint: self.fingerprint.clone(),
        })
    }

    fn embed_video(&self, clip: &VideoClip) -> Result<Embedding, FeatureError> {
        if clip.is_empty() {
            return Err(FeatureError::BadInput("empty video".into()));
        }
        let volume = self.volume(&clip.frames);
        let pooled = adaptive_pool(&volume, 1, 1, 1);
        Ok(Embedding {
            data: self.embed.apply(&pooled).data,
            pooling: "global mean over t,h,w then seeded channel mix",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{noise_frame, solid_frame};

    #[test]
    fn deterministic_and_seed_sensitive() {
        let frame = noise_frame(40, 30, 1);
        let a = ToyFrameExtractor::new(0);
        let b = ToyFrameExtractor::new(0);
        assert_eq!(
            a.features(&frame).unwrap(),
            b.features(&frame).unwrap()
        );
        let c = ToyFrameExtractor::new(1);
        assert_ne!(a.fingerprint(), c.fingerprint());
        assert_ne!(
            a.features(&frame).unwrap().layers,
            c.features(&frame).unwrap().layers
        );
    }

    #[test]
    fn zero_frame_yields_bias_activations() {
        let ext = ToyFrameExtractor::new(7);
        let set = ext.features(&solid_frame(64, 48, [0, 0, 0])).unwrap();
        for (layer, acts) in set.layers.iter().enumerate() {
            let (_, bias) = ext.layer_mix(layer);
            let positions = acts.positions();
            for c in 0..acts.channels {
                for p in 0..positions {
                    assert_eq!(acts.data[c * positions + p], bias[c]);
                }
            }
        }
    }

    #[test]
    fn constant_frame_embedding_is_analytic() {
        let ext = ToyFrameExtractor::new(3);
        let rgb = [120u8, 30, 240];
        let embedding = ext.embed(&solid_frame(20, 20, rgb)).unwrap();
        let (weights, bias) = ext.embed_mix();
        for (k, &v) in embedding.data.iter().enumerate() {
            let mut expected = bias[k];
            for c in 0..3 {
                expected += weights[k * 3 + c] * (rgb[c] as f32 / 255.0);
            }
            assert!((v - expected).abs() < 1e-5, "component {k}: {v} vs {expected}");
        }
    }

    #[test]
    fn clip_extractor_enforces_window() {
        let ext = ToyClipExtractor::new(0);
        let frames = vec![solid_frame(16, 16, [1, 2, 3]); 9];
        assert!(matches!(
            ext.features(&frames),
            Err(FeatureError::WrongClipLength {
                expected: 10,
                got: 9
            })
        ));
        let frames = vec![solid_frame(16, 16, [1, 2, 3]); 10];
        let set = ext.features(&frames).unwrap();
        assert_eq!(set.layers.len(), 5);
    }

    #[test]
    fn video_embedding_pools_whole_clip() {
        let ext = ToyClipExtractor::new(0);
        // A constant video of any length embeds like its constant color.
        for len in [10usize, 17, 30] {
            let clip = crate::corpus::VideoClip::new(
                "v",
                vec![solid_frame(24, 24, [50, 100, 150]); len],
            )
            .unwrap();
            let e = ext.embed_video(&clip).unwrap();
            let (weights, bias) = ext.embed_mix();
            for (k, &v) in e.data.iter().enumerate() {
                let mut expected = bias[k];
                for c in 0..3 {
                    expected += weights[k * 3 + c] * ([50.0, 100.0, 150.0][c] / 255.0);
                }
                assert!((v - expected).abs() < 1e-5);
            }
        }
    }
}
