//! Camera-motion annotation via robust affine alignment.
//!
//! Frame pairs are aligned with a feature-based affine estimate; the
//! fraction of the canvas left uncovered by the warp proxies how much the
//! camera moved. A clip's total frame compatibility is the minimum over
//! all pairs of ten evenly spaced frames, thresholded into low/high camera
//! motion labels at the extremes.

mod affine;
mod coverage;
mod detect;
pub mod suite;

pub use affine::{estimate_affine, AffineTransform, RansacParams};
pub use coverage::invalid_fraction;
pub use detect::{detect_features, match_features, DetectParams, Feature};


use crate::corpus::{Setting, VideoClip};

/// Number of evenly spaced frames sampled per clip.
pub const SAMPLED_FRAMES: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum VideoAttrError {
    #[error("frames have different dimensions")]
    DimensionMismatch,
    #[error("frame {width}x{height} is below the detector's 32x32 minimum")]
    FrameTooSmall { width: u32, height: u32 },
    #[error("alignment failed: {matches} consensus matches, need {needed}")]
    AlignmentFailed { matches: usize, needed: usize },
    #[error("transform is not invertible")]
    NonInvertible,
    #[error("clip has {got} frames; camera-motion annotation needs at least {need}")]
    ClipTooShort { got: usize, need: usize },
}

/// How an invalid-pixel fraction maps to a compatibility score in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompatibilityMode {
    /// `1 - fraction`; the default reading of "inverse".
    Complement,
    /// `epsilon / (fraction + epsilon)`: a scaled reciprocal that stays in
    /// (0, 1] and equals 1 at zero fraction.
    Reciprocal { epsilon: f64 },
}

impl Default for CompatibilityMode {
    fn default() -> Self {
        CompatibilityMode::Complement
    }
}

impl CompatibilityMode {
    fn score(&self, fraction: f64) -> f64 {
        match self {
            CompatibilityMode::Complement => 1.0 - fraction,
            CompatibilityMode::Reciprocal { epsilon } => epsilon / (fraction + epsilon),
        }
    }
}

/// Alignment quality of one sampled frame pair.
#[derive(Debug, Clone, Copy)]
pub struct PairwiseCompatibility {
    /// Indices into the clip's frames.
    pub pair: (usize, usize),
    pub invalid_forward: f64,
    pub invalid_backward: f64,
    /// `1 - max(invalid fractions)` under the default mode; an alignment
    /// failure in either direction scores 0.
    pub compatibility: f64,
}

/// Label decision bands over total frame compatibility. A clip labels
/// `low` (motion) when compatibility is at least `low_motion_min`, `high`
/// when at most `high_motion_max`, and stays unlabeled in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraMotionThresholds {
    pub low_motion_min: f64,
    pub high_motion_max: f64,
}

impl Default for CameraMotionThresholds {
    /// Derived from the bundled synthetic validation suite
    /// ([`suite::validation_suite`]): static and 1px-jitter clips score
    /// 0.971..=1.0 while sustained pans of 10px/frame and up score below
    /// 0.72, so the cutoffs sit at the extreme ends with an unlabeled band
    /// between (gentle pans like 6px/frame stay unlabeled).
    fn default() -> Self {
        Self {
            low_motion_min: 0.96,
            high_motion_max: 0.75,
        }
    }
}

/// Outcome of camera-motion annotation for one clip.
#[derive(Debug, Clone)]
pub struct CameraMotionResult {
    /// Minimum pairwise compatibility over all sampled pairs.
    pub total_compatibility: f64,
    pub sampled_indices: Vec<usize>,
    pub pairs: Vec<PairwiseCompatibility>,
    pub label: Option<Setting>,
}

/// Classifies a clip's camera motion from the minimum bidirectional warp
/// compatibility over all pairs of ten evenly spaced frames.
pub fn classify_camera_motion(
    clip: &VideoClip,
    thresholds: &CameraMotionThresholds,
    params: &RansacParams,
    mode: CompatibilityMode,
    seed: u64,
) -> Result<CameraMotionResult, VideoAttrError> {
    if clip.len() < SAMPLED_FRAMES {
        return Err(VideoAttrError::ClipTooShort {
            got: clip.len(),
            need: SAMPLED_FRAMES,
        });
    }
    let indices = sample_indices(clip.len());
    let (w, h) = (clip.width(), clip.height());

    let mut pairs = Vec::with_capacity(SAMPLED_FRAMES * (SAMPLED_FRAMES - 1) / 2);
    let mut total = 1.0f64;
    for i in 0..indices.len() {
        for j in i + 1..indices.len() {
            let (fi, fj) = (indices[i], indices[j]);
            let pair_seed = crate::rng::child_seed(seed, &format!("pair.{fi}.{fj}"));
            let forward = estimate_affine(&clip.frames[fi], &clip.frames[fj], params, pair_seed)
                .and_then(|t| invalid_fraction(&t, w, h));
            let backward = estimate_affine(&clip.frames[fj], &clip.frames[fi], params, pair_seed)
                .and_then(|t| invalid_fraction(&t, w, h));
            // Degenerate texture or blown alignment reads as maximal motion.
            let compatibility = match (&forward, &backward) {
                (Ok(f), Ok(b)) => mode.score(f.max(*b)),
                _ => 0.0,
            };
            pairs.push(PairwiseCompatibility {
                pair: (fi, fj),
                invalid_forward: forward.unwrap_or(1.0),
                invalid_backward: backward.unwrap_or(1.0),
                compatibility,
            });
            total = total.min(compatibility);
        }
    }

    let label = if total >= thresholds.low_motion_min {
        Some(Setting::Low)
    } else if total <= thresholds.high_motion_max {
        Some(Setting::High)
    } else {
        None
    };
    Ok(CameraMotionResult {
        total_compatibility: total,
        sampled_indices: indices,
        pairs,
        label,
    })
}

/// Ten evenly spaced frame indices including the first and last.
fn sample_indices(length: usize) -> Vec<usize> {
    (0..SAMPLED_FRAMES)
        .map(|i| (i as f64 * (length - 1) as f64 / (SAMPLED_FRAMES - 1) as f64).round() as usize)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{pan_clip, textured_frame};

    #[test]
    fn sampled_indices_cover_ends() {
        let idx = sample_indices(10);
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
        let idx = sample_indices(90);
        assert_eq!(idx.len(), SAMPLED_FRAMES);
        assert_eq!(*idx.first().unwrap(), 0);
        assert_eq!(*idx.last().unwrap(), 89);
    }

    #[test]
    fn identical_frames_score_one_and_label_low() {
        let frame = textured_frame(240, 180, 20);
        let clip = crate::corpus::VideoClip::new("static", vec![frame; 10]).unwrap();
        let result = classify_camera_motion(
            &clip,
            &CameraMotionThresholds::default(),
            &RansacParams::default(),
            CompatibilityMode::default(),
            0,
        )
        .unwrap();
        assert_eq!(result.pairs.len(), 45);
        assert_eq!(result.total_compatibility, 1.0);
        assert_eq!(result.label, Some(Setting::Low));
    }

    #[test]
    fn strong_pan_labels_high() {
        // 5% of width per frame; the farthest sampled pair is 45% apart.
        let base = textured_frame(640, 200, 21);
        let clip = pan_clip("pan", &base, 320, 180, 10, (16, 0));
        let result = classify_camera_motion(
            &clip,
            &CameraMotionThresholds::default(),
            &RansacParams::default(),
            CompatibilityMode::default(),
            0,
        )
        .unwrap();
        assert!(
            result.total_compatibility <= 1.0 - 0.45 + 1e-6,
            "total {}",
            result.total_compatibility
        );
        assert_eq!(result.label, Some(Setting::High));
    }

    #[test]
    fn short_clip_is_rejected() {
        let frame = textured_frame(64, 64, 22);
        let clip = crate::corpus::VideoClip::new("short", vec![frame; 9]).unwrap();
        assert!(matches!(
            classify_camera_motion(
                &clip,
                &CameraMotionThresholds::default(),
                &RansacParams::default(),
                CompatibilityMode::default(),
                0,
            ),
            Err(VideoAttrError::ClipTooShort { got: 9, need: 10 })
        ));
    }

    #[test]
    fn reversal_invariance() {
        let base = textured_frame(500, 200, 23);
        let clip = pan_clip("pan", &base, 320, 180, 10, (4, 0));
        let mut reversed_frames = clip.frames.clone();
        reversed_frames.reverse();
        let reversed = crate::corpus::VideoClip::new("rev", reversed_frames).unwrap();
        let args = (
            CameraMotionThresholds::default(),
            RansacParams::default(),
            CompatibilityMode::default(),
        );
        let a = classify_camera_motion(&clip, &args.0, &args.1, args.2, 3).unwrap();
        let b = classify_camera_motion(&reversed, &args.0, &args.1, args.2, 3).unwrap();
        // Pairwise compatibility takes the max over both directions and the
        // total takes the min over unordered pairs, so frame order cannot
        // matter beyond RANSAC noise.
        assert!((a.total_compatibility - b.total_compatibility).abs() < 2e-2);
    }
}
