//! Synthetic labeled validation suite for the camera-motion proxy.
//!
//! Panned crops of textured stills with known per-frame steps stand in for
//! hand-labeled footage: sustained pans are high camera motion, static and
//! sub-pixel-jitter clips are low. The suite calibrates the default
//! thresholds and anchors the proxy's precision-recall check.

use crate::corpus::{Setting, VideoClip};
use crate::synth::{pan_clip, textured_frame};

/// A clip with its ground-truth camera-motion label.
pub struct LabeledClip {
    pub clip: VideoClip,
    pub truth: Setting,
}

/// Builds the bundled validation suite at a 320x180 working resolution:
/// static clips, 1px jitter pans (low motion), and sustained pans of
/// 6..=22 px/frame (high motion). Deterministic in `seed`.
pub fn validation_suite(seed: u64) -> Vec<LabeledClip> {
    let mut clips = Vec::new();
    let (w, h, frames) = (320u32, 180u32, 10usize);

    for i in 0..4 {
        let base = textured_frame(560, 420, crate::rng::child_seed(seed, &format!("static.{i}")));
        let frame = crate::synth::crop(&base, 60, 60, w, h);
        clips.push(LabeledClip {
            clip: VideoClip::new(format!("static_{i}"), vec![frame; frames]).unwrap(),
            truth: Setting::Low,
        });
    }
    for i in 0..4 {
        let base = textured_frame(560, 420, crate::rng::child_seed(seed, &format!("jitter.{i}")));
        let clip = pan_clip(&format!("jitter_{i}"), &base, w, h, frames, (1, 0));
        clips.push(LabeledClip {
            clip,
            truth: Setting::Low,
        });
    }
    for (i, step) in [6u32, 10, 14, 18, 22].iter().enumerate() {
        let span = w + step * (frames as u32 - 1) + 8;
        let base = textured_frame(span, 260, crate::rng::child_seed(seed, &format!("pan.{i}")));
        let clip = pan_clip(&format!("pan_{step}"), &base, w, h, frames, (*step, 0));
        clips.push(LabeledClip {
            clip,
            truth: Setting::High,
        });
    }
    clips
}

/// Average precision of `scores` (higher = predicted positive) against
/// binary ground truth: the standard step-integrated area under the
/// precision-recall curve.
pub fn average_precision(scored: &[(f64, bool)]) -> f64 {
    let positives = scored.iter().filter(|(_, truth)| *truth).count();
    assert!(positives > 0, "need at least one positive example");
    let mut ranked: Vec<_> = scored.to_vec();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut true_positives = 0usize;
    let mut ap = 0.0;
    for (rank, (_, truth)) in ranked.iter().enumerate() {
        if *truth {
            true_positives += 1;
            ap += true_positives as f64 / (rank + 1) as f64;
        }
    }
    ap / positives as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_has_both_classes() {
        let suite = validation_suite(0);
        let high = suite.iter().filter(|c| c.truth == Setting::High).count();
        let low = suite.iter().filter(|c| c.truth == Setting::Low).count();
        assert!(high >= 4 && low >= 4);
    }

    #[test]
    fn average_precision_extremes() {
        // Perfect ranking.
        let perfect = [(0.9, true), (0.8, true), (0.2, false), (0.1, false)];
        assert!((average_precision(&perfect) - 1.0).abs() < 1e-12);
        // Worst ranking: positives at the bottom.
        let worst = [(0.9, false), (0.8, false), (0.2, true), (0.1, true)];
        let ap = average_precision(&worst);
        assert!((ap - (1.0 / 3.0 + 2.0 / 4.0) / 2.0).abs() < 1e-12);
    }
}
