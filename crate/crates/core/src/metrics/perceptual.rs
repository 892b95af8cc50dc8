//! Perceptual feature distances: the shared kernel plus the frame-level
//! (LPIPS) and clip-level (PVCS) video metrics.

use std::path::Path;

use super::MetricError;
use crate::corpus::VideoClip;
use crate::features::{ClipExtractor, FeatureSet, FrameExtractor};

/// Numerical guard in the channel unit normalization.
const NORM_EPSILON: f64 = 1e-10;

/// Per-layer channel weights applied inside the perceptual distance.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerWeights {
    /// Weight 1 for every channel (used by PVCS).
    Unit,
    /// Learned calibration weights, one non-negative value per channel per
    /// layer (used by LPIPS; loaded as data).
    PerChannel(Vec<Vec<f32>>),
}

impl LayerWeights {
    fn validate(&self, layer_channels: &[usize]) -> Result<(), MetricError> {
        if let LayerWeights::PerChannel(weights) = self {
            if weights.len() != layer_channels.len() {
                return Err(MetricError::BadWeights(format!(
                    "{} weight layers for {} feature layers",
                    weights.len(),
                    layer_channels.len()
                )));
            }
            for (i, (w, &c)) in weights.iter().zip(layer_channels).enumerate() {
                if w.len() != c {
                    return Err(MetricError::BadWeights(format!(
                        "layer {i}: {} weights for {c} channels",
                        w.len()
                    )));
                }
                if w.iter().any(|v| *v < 0.0) {
                    return Err(MetricError::BadWeights(format!(
                        "layer {i}: negative channel weight"
                    )));
                }
            }
        }
        Ok(())
    }

    fn weight(&self, layer: usize, channel: usize) -> f64 {
        match self {
            LayerWeights::Unit => 1.0,
            LayerWeights::PerChannel(w) => w[layer][channel] as f64,
        }
    }
}

/// Loads LPIPS-style calibration weights from a safetensors file with
/// tensors `lin0.weight`, `lin1.weight`, ... (one flat vector per layer;
/// exports with shape `[1, C, 1, 1]` are accepted and flattened).
pub fn load_lpips_weights(
    path: &Path,
    extractor: &dyn FrameExtractor,
) -> Result<LayerWeights, MetricError> {
    let (tensors, _) = crate::features::load_tensors(path)?;
    let mut layers = Vec::new();
    for i in 0..extractor.layer_channels().len() {
        let name = format!("lin{i}.weight");
        let tensor = tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| MetricError::BadWeights(format!("missing tensor {name}")))?;
        layers.push(tensor.data.clone());
    }
    let weights = LayerWeights::PerChannel(layers);
    weights.validate(extractor.layer_channels())?;
    Ok(weights)
}

/// Distance between two feature sets of identical schema: per layer, both
/// activations are channel-unit-normalized at every position, squared
/// differences are channel-weighted and averaged over all positions, and
/// layer values sum. Zero iff the activations are identical.
pub fn perceptual_distance(
    a: &FeatureSet,
    b: &FeatureSet,
    weights: &LayerWeights,
) -> Result<f64, MetricError> {
    if a.fingerprint != b.fingerprint {
        return Err(MetricError::SchemaMismatch(format!(
            "feature fingerprints differ: {} vs {}",
            a.fingerprint, b.fingerprint
        )));
    }
    if a.layers.len() != b.layers.len() {
        return Err(MetricError::SchemaMismatch(format!(
            "{} vs {} layers",
            a.layers.len(),
            b.layers.len()
        )));
    }
    let channels: Vec<usize> = a.layers.iter().map(|l| l.channels).collect();
    weights.validate(&channels)?;

    let mut total = 0.0f64;
    for (layer, (la, lb)) in a.layers.iter().zip(&b.layers).enumerate() {
        if la.shape() != lb.shape() {
            return Err(MetricError::SchemaMismatch(format!(
                "layer {layer}: {:?} vs {:?}",
                la.shape(),
                lb.shape()
            )));
        }
        let positions = la.positions();
        let channels = la.channels;
        let mut layer_acc = 0.0f64;
        for p in 0..positions {
            let norm_a = channel_norm(&la.data, channels, positions, p);
            let norm_b = channel_norm(&lb.data, channels, positions, p);
            let mut acc = 0.0f64;
            for c in 0..channels {
                let va = la.data[c * positions + p] as f64 / norm_a;
                let vb = lb.data[c * positions + p] as f64 / norm_b;
                let diff = va - vb;
                acc += weights.weight(layer, c) * diff * diff;
            }
            layer_acc += acc;
        }
        total += layer_acc / positions as f64;
    }
    Ok(total)
}

#[inline]
fn channel_norm(data: &[f32], channels: usize, positions: usize, p: usize) -> f64 {
    let mut sq = 0.0f64;
    for c in 0..channels {
        let v = data[c * positions + p] as f64;
        sq += v * v;
    }
    sq.sqrt() + NORM_EPSILON
}

/// Frame-level perceptual reconstruction distance: the mean over
/// corresponding frames of the perceptual distance on frame features.
pub fn lpips_video(
    pred: &VideoClip,
    reference: &VideoClip,
    extractor: &dyn FrameExtractor,
    weights: &LayerWeights,
) -> Result<f64, MetricError> {
    check_aligned(pred, reference)?;
    let mut total = 0.0f64;
    for (p, r) in pred.frames.iter().zip(&reference.frames) {
        let fp = extractor.features(p)?;
        let fr = extractor.features(r)?;
        total += perceptual_distance(&fp, &fr, weights)?;
    }
    Ok(total / pred.len() as f64)
}

/// Clip-level perceptual reconstruction distance: the mean over all
/// stride-1 windows of the extractor's native length of the perceptual
/// distance on clip features, with unit weights over the five layers.
pub fn pvcs_video(
    pred: &VideoClip,
    reference: &VideoClip,
    extractor: &dyn ClipExtractor,
) -> Result<f64, MetricError> {
    check_aligned(pred, reference)?;
    if extractor.layer_channels().len() != 5 {
        return Err(MetricError::SchemaMismatch(format!(
            "perceptual-video extractor exposes {} layers, expected 5",
            extractor.layer_channels().len()
        )));
    }
    let window = extractor.window();
    if pred.len() < window {
        return Err(MetricError::TooShort {
            need: window,
            got: pred.len(),
        });
    }
    let count = pred.len() - window + 1;
    let mut total = 0.0f64;
    for start in 0..count {
        let fp = extractor.features(&pred.frames[start..start + window])?;
        let fr = extractor.features(&reference.frames[start..start + window])?;
        total += perceptual_distance(&fp, &fr, &LayerWeights::Unit)?;
    }
    Ok(total / count as f64)
}

fn check_aligned(pred: &VideoClip, reference: &VideoClip) -> Result<(), MetricError> {
    if pred.len() != reference.len() {
        return Err(MetricError::LengthMismatch {
            a: pred.len(),
            b: reference.len(),
        });
    }
    if pred.width() != reference.width() || pred.height() != reference.height() {
        return Err(MetricError::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            pred.width(),
            pred.height(),
            reference.width(),
            reference.height()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Activation, Fingerprint};
    use crate::features::{ToyClipExtractor, ToyFrameExtractor};
    use crate::synth::{noise_frame, textured_frame};

    fn feature_set(layers: Vec<Activation>) -> FeatureSet {
        FeatureSet {
            layers,
            fingerprint: Fingerprint::of_bytes(b"hand"),
        }
    }

    fn single(c: usize, values: &[f32]) -> Activation {
        let mut a = Activation::zeros(c, 1, 1, values.len() / c);
        a.data.copy_from_slice(values);
        a
    }

    #[test]
    fn identical_features_have_zero_distance() {
        let ext = ToyFrameExtractor::new(0);
        let frame = noise_frame(32, 32, 9);
        let f = ext.features(&frame).unwrap();
        let d = perceptual_distance(&f, &f, &LayerWeights::Unit).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn one_channel_unit_case_matches_hand_formula() {
        // Single layer, one channel, one position: a = 1, b = 0.
        // Normalized a = 1 / (1 + eps), normalized b = 0; distance is the
        // square of the normalized difference.
        let a = feature_set(vec![single(1, &[1.0])]);
        let b = feature_set(vec![single(1, &[0.0])]);
        let d = perceptual_distance(&a, &b, &LayerWeights::Unit).unwrap();
        let expected = (1.0f64 / (1.0 + 1e-10)).powi(2);
        assert!((d - expected).abs() < 1e-15, "{d} vs {expected}");
    }

    #[test]
    fn two_channel_weighted_case_matches_hand_arithmetic() {
        // One layer, two channels, one position.
        // a = (3, 4): norm 5 -> (0.6, 0.8); b = (1, 0): norm 1 -> (1, 0).
        // Weighted squared diff: 2*(0.6-1)^2 + 0.5*(0.8-0)^2 = 0.64.
        let a = feature_set(vec![single(2, &[3.0, 4.0])]);
        let b = feature_set(vec![single(2, &[1.0, 0.0])]);
        let weights = LayerWeights::PerChannel(vec![vec![2.0, 0.5]]);
        let d = perceptual_distance(&a, &b, &weights).unwrap();
        assert!((d - 0.64).abs() < 1e-9, "{d}");
    }

    #[test]
    fn distance_is_symmetric() {
        let ext = ToyFrameExtractor::new(1);
        let fa = ext.features(&noise_frame(40, 30, 1)).unwrap();
        let fb = ext.features(&noise_frame(40, 30, 2)).unwrap();
        let ab = perceptual_distance(&fa, &fb, &LayerWeights::Unit).unwrap();
        let ba = perceptual_distance(&fb, &fa, &LayerWeights::Unit).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!(ab > 0.0);
    }

    #[test]
    fn schema_mismatch_detected() {
        let a = feature_set(vec![single(1, &[1.0])]);
        let b = feature_set(vec![single(1, &[1.0]), single(1, &[2.0])]);
        assert!(matches!(
            perceptual_distance(&a, &b, &LayerWeights::Unit),
            Err(MetricError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn lpips_zero_on_identical_video_and_single_frame_equivalence() {
        let ext = ToyFrameExtractor::new(2);
        let frames: Vec<_> = (0..3).map(|i| textured_frame(64, 48, i)).collect();
        let clip = VideoClip::new("v", frames.clone()).unwrap();
        assert_eq!(
            lpips_video(&clip, &clip, &ext, &LayerWeights::Unit).unwrap(),
            0.0
        );

        let one = VideoClip::new("a", vec![frames[0].clone()]).unwrap();
        let other = VideoClip::new("b", vec![frames[1].clone()]).unwrap();
        let video_value = lpips_video(&one, &other, &ext, &LayerWeights::Unit).unwrap();
        let frame_value = perceptual_distance(
            &ext.features(&frames[0]).unwrap(),
            &ext.features(&frames[1]).unwrap(),
            &LayerWeights::Unit,
        )
        .unwrap();
        assert_eq!(video_value, frame_value);
    }

    #[test]
    fn pvcs_window_protocol() {
        let ext = ToyClipExtractor::new(0);
        let make = |seed_base: u64, len: usize| {
            VideoClip::new(
                format!("v{seed_base}"),
                (0..len)
                    .map(|i| noise_frame(24, 24, seed_base * 1000 + i as u64))
                    .collect(),
            )
            .unwrap()
        };
        let pred = make(1, 13);
        let reference = make(2, 13);
        // Value equals brute-force enumeration of the T-9 windows.
        let value = pvcs_video(&pred, &reference, &ext).unwrap();
        let mut expected = 0.0;
        for start in 0..=3 {
            expected += perceptual_distance(
                &ext.features(&pred.frames[start..start + 10]).unwrap(),
                &ext.features(&reference.frames[start..start + 10]).unwrap(),
                &LayerWeights::Unit,
            )
            .unwrap();
        }
        expected /= 4.0;
        assert!((value - expected).abs() < 1e-12);

        // Identical videos score zero; exactly 10 frames means one window.
        assert_eq!(pvcs_video(&pred, &pred, &ext).unwrap(), 0.0);
        let ten = make(3, 10);
        let ten_ref = make(4, 10);
        let one_window = pvcs_video(&ten, &ten_ref, &ext).unwrap();
        let direct = perceptual_distance(
            &ext.features(&ten.frames[..]).unwrap(),
            &ext.features(&ten_ref.frames[..]).unwrap(),
            &LayerWeights::Unit,
        )
        .unwrap();
        assert_eq!(one_window, direct);

        let nine = make(5, 9);
        assert!(matches!(
            pvcs_video(&nine, &nine, &ext),
            Err(MetricError::TooShort { need: 10, got: 9 })
        ));
    }

    #[test]
    fn removing_final_frame_changes_only_last_window() {
        let ext = ToyClipExtractor::new(1);
        let pred = VideoClip::new(
            "p",
            (0..12).map(|i| noise_frame(20, 20, 100 + i)).collect::<Vec<_>>(),
        )
        .unwrap();
        let refv = VideoClip::new(
            "r",
            (0..12).map(|i| noise_frame(20, 20, 200 + i)).collect::<Vec<_>>(),
        )
        .unwrap();
        let full = pvcs_video(&pred, &refv, &ext).unwrap(); // 3 windows
        let trimmed = pvcs_video(
            &VideoClip::new("p2", pred.frames[..11].to_vec()).unwrap(),
            &VideoClip::new("r2", refv.frames[..11].to_vec()).unwrap(),
            &ext,
        )
        .unwrap(); // first 2 of the same windows
        let last = perceptual_distance(
            &ext.features(&pred.frames[2..12]).unwrap(),
            &ext.features(&refv.frames[2..12]).unwrap(),
            &LayerWeights::Unit,
        )
        .unwrap();
        assert!((full * 3.0 - (trimmed * 2.0 + last)).abs() < 1e-9);
    }

    #[test]
    fn lpips_weight_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lpips.safetensors");
        let ext = ToyFrameExtractor::new(0);
        let tensors: Vec<_> = ext
            .layer_channels()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                crate::features::NamedTensor::new(
                    format!("lin{i}.weight"),
                    vec![c],
                    (0..c).map(|k| 0.1 * (k + 1) as f32).collect(),
                )
            })
            .collect();
        crate::features::write_tensors(&path, &tensors).unwrap();
        let weights = load_lpips_weights(&path, &ext).unwrap();
        match &weights {
            LayerWeights::PerChannel(layers) => {
                assert_eq!(layers.len(), 3);
                assert!((layers[0][1] - 0.2).abs() < 1e-6);
            }
            _ => panic!("expected per-channel weights"),
        }
    }
}
