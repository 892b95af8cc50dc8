//! Realism metrics: Fréchet distances between embedding Gaussians of
//! prediction and reference sets (frames for FID, whole videos for VFID).

use image::RgbImage;

use super::frechet::{frechet_distance, EmbeddingAccumulator};
use super::MetricError;
use crate::corpus::VideoClip;
use crate::features::{ClipExtractor, FrameExtractor};

/// A realism score plus a degeneracy note: `degenerate` is set when either
/// set was too small to support its covariance (n <= embedding dim), in
/// which case the regularized value should be read with care.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealismScore {
    pub value: f64,
    pub degenerate: bool,
}

/// FID over frame sets: fits a Gaussian to each set's frame embeddings and
/// returns their Fréchet distance. Invariant to the order of either set.
pub fn fid(
    pred_frames: &[&RgbImage],
    ref_frames: &[&RgbImage],
    extractor: &dyn FrameExtractor,
) -> Result<RealismScore, MetricError> {
    if pred_frames.is_empty() || ref_frames.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let mut pred_acc = EmbeddingAccumulator::new(extractor.embedding_len());
    for frame in pred_frames {
        pred_acc.push(&extractor.embed(frame)?.data);
    }
    let mut ref_acc = EmbeddingAccumulator::new(extractor.embedding_len());
    for frame in ref_frames {
        ref_acc.push(&extractor.embed(frame)?.data);
    }
    score(&pred_acc, &ref_acc)
}

/// VFID over video sets: as FID, over whole-video embeddings.
pub fn vfid(
    pred_videos: &[&VideoClip],
    ref_videos: &[&VideoClip],
    extractor: &dyn ClipExtractor,
) -> Result<RealismScore, MetricError> {
    if pred_videos.is_empty() || ref_videos.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let mut pred_acc = EmbeddingAccumulator::new(extractor.embedding_len());
    for clip in pred_videos {
        pred_acc.push(&extractor.embed_video(clip)?.data);
    }
    let mut ref_acc = EmbeddingAccumulator::new(extractor.embedding_len());
    for clip in ref_videos {
        ref_acc.push(&extractor.embed_video(clip)?.data);
    }
    score(&pred_acc, &ref_acc)
}

/// Fréchet distance between two accumulated embedding sets. Exposed so the
/// harness can shard extraction and merge accumulators before scoring.
pub fn score(
    pred: &EmbeddingAccumulator,
    reference: &EmbeddingAccumulator,
) -> Result<RealismScore, MetricError> {
    let g1 = pred.fit()?;
    let g2 = reference.fit()?;
    let value = frechet_distance(&g1, &g2)?;
    Ok(RealismScore {
        value,
        degenerate: g1.degenerate() || g2.degenerate(),
    })
}
