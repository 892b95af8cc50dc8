//! 2D affine transforms and robust estimation from feature matches.

use image::RgbImage;
use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use super::detect::{detect_features, match_features, DetectParams};
use super::VideoAttrError;
use crate::rng;

/// Row-major 2x3 affine transform mapping source to target coordinates:
/// `(x, y) -> (m[0] x + m[1] y + m[2], m[3] x + m[4] y + m[5])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    pub m: [f64; 6],
}

impl AffineTransform {
    pub fn identity() -> Self {
        Self {
            m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            m: [1.0, 0.0, tx, 0.0, 1.0, ty],
        }
    }

    /// Rotation by `theta` radians about a center point.
    pub fn rotation_about(theta: f64, cx: f64, cy: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            m: [
                c,
                -s,
                cx - c * cx + s * cy,
                s,
                c,
                cy - s * cx - c * cy,
            ],
        }
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.m[0] * x + self.m[1] * y + self.m[2],
            self.m[3] * x + self.m[4] * y + self.m[5],
        )
    }

    pub fn determinant(&self) -> f64 {
        self.m[0] * self.m[4] - self.m[1] * self.m[3]
    }

    pub fn inverse(&self) -> Result<AffineTransform, VideoAttrError> {
        let det = self.determinant();
        if det.abs() < 1e-12 {
            return Err(VideoAttrError::NonInvertible);
        }
        let (a, b, tx, c, d, ty) = (
            self.m[0], self.m[1], self.m[2], self.m[3], self.m[4], self.m[5],
        );
        let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
        Ok(AffineTransform {
            m: [
                ia,
                ib,
                -(ia * tx + ib * ty),
                ic,
                id,
                -(ic * tx + id * ty),
            ],
        })
    }

    /// Max absolute difference of the linear part from the identity.
    pub fn linear_deviation(&self) -> f64 {
        [
            self.m[0] - 1.0,
            self.m[1],
            self.m[3],
            self.m[4] - 1.0,
        ]
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// RANSAC settings for affine estimation. Deterministic for a fixed seed.
#[derive(Debug, Clone)]
pub struct RansacParams {
    pub max_iterations: usize,
    pub inlier_threshold_px: f64,
    pub confidence: f64,
    pub min_inliers: usize,
    pub detect: DetectParams,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            inlier_threshold_px: 3.0,
            confidence: 0.999,
            min_inliers: 12,
            detect: DetectParams::default(),
        }
    }
}

/// Estimates the affine transform mapping `frame_a` coordinates into
/// `frame_b` via matched local features and RANSAC. Returns
/// `VideoAttrError::AlignmentFailed` when there is not enough repeatable
/// structure.
pub fn estimate_affine(
    frame_a: &RgbImage,
    frame_b: &RgbImage,
    params: &RansacParams,
    seed: u64,
) -> Result<AffineTransform, VideoAttrError> {
    if frame_a.dimensions() != frame_b.dimensions() {
        return Err(VideoAttrError::DimensionMismatch);
    }
    if frame_a.width() < 32 || frame_a.height() < 32 {
        return Err(VideoAttrError::FrameTooSmall {
            width: frame_a.width(),
            height: frame_a.height(),
        });
    }
    let features_a = detect_features(frame_a, &params.detect);
    let features_b = detect_features(frame_b, &params.detect);
    let matches = match_features(&features_a, &features_b, params.detect.match_ratio);
    if matches.len() < params.min_inliers {
        return Err(VideoAttrError::AlignmentFailed {
            matches: matches.len(),
            needed: params.min_inliers,
        });
    }
    let pairs: Vec<((f64, f64), (f64, f64))> = matches
        .iter()
        .map(|&(ia, ib)| {
            (
                (features_a[ia].x, features_a[ia].y),
                (features_b[ib].x, features_b[ib].y),
            )
        })
        .collect();

    ransac_affine(&pairs, params, seed)
}

fn ransac_affine(
    pairs: &[((f64, f64), (f64, f64))],
    params: &RansacParams,
    seed: u64,
) -> Result<AffineTransform, VideoAttrError> {
    let mut rng = rng::stream(seed, "videoattr.ransac");
    let threshold_sq = params.inlier_threshold_px * params.inlier_threshold_px;
    let n = pairs.len();
    let mut best: Option<(usize, AffineTransform)> = None;
    let mut needed_iters = params.max_iterations;

    for iter in 0..params.max_iterations {
        if iter >= needed_iters {
            break;
        }
        let mut idx = [0usize; 3];
        idx[0] = rng.random_range(0..n);
        loop {
            idx[1] = rng.random_range(0..n);
            if idx[1] != idx[0] {
                break;
            }
        }
        loop {
            idx[2] = rng.random_range(0..n);
            if idx[2] != idx[0] && idx[2] != idx[1] {
                break;
            }
        }
        let Some(model) = solve_exact(pairs[idx[0]], pairs[idx[1]], pairs[idx[2]]) else {
            continue;
        };
        let inliers = count_inliers(&model, pairs, threshold_sq);
        if best.as_ref().is_none_or(|(count, _)| inliers > *count) {
            best = Some((inliers, model));
            // Standard adaptive iteration bound.
            let inlier_ratio = inliers as f64 / n as f64;
            let p_good_sample = inlier_ratio.powi(3);
            if p_good_sample > 1e-9 {
                let denom = (1.0 - p_good_sample).max(1e-12).ln();
                let estimate = ((1.0 - params.confidence).ln() / denom).ceil();
                needed_iters = (estimate as usize).clamp(iter + 1, params.max_iterations);
            }
        }
    }

    let (count, model) = best.ok_or(VideoAttrError::AlignmentFailed {
        matches: n,
        needed: params.min_inliers,
    })?;
    if count < params.min_inliers {
        return Err(VideoAttrError::AlignmentFailed {
            matches: count,
            needed: params.min_inliers,
        });
    }
    // Refit on the consensus set.
    let inliers: Vec<_> = pairs
        .iter()
        .filter(|(a, b)| {
            let (px, py) = model.apply(a.0, a.1);
            (px - b.0).powi(2) + (py - b.1).powi(2) <= threshold_sq
        })
        .cloned()
        .collect();
    Ok(least_squares(&inliers).unwrap_or(model))
}

fn count_inliers(
    model: &AffineTransform,
    pairs: &[((f64, f64), (f64, f64))],
    threshold_sq: f64,
) -> usize {
    pairs
        .iter()
        .filter(|(a, b)| {
            let (px, py) = model.apply(a.0, a.1);
            (px - b.0).powi(2) + (py - b.1).powi(2) <= threshold_sq
        })
        .count()
}

/// Exact affine from three correspondences; None when degenerate
/// (collinear sample).
fn solve_exact(
    p0: ((f64, f64), (f64, f64)),
    p1: ((f64, f64), (f64, f64)),
    p2: ((f64, f64), (f64, f64)),
) -> Option<AffineTransform> {
    let a = Matrix3::new(
        p0.0 .0, p0.0 .1, 1.0, //
        p1.0 .0, p1.0 .1, 1.0, //
        p2.0 .0, p2.0 .1, 1.0,
    );
    let inv = a.try_inverse()?;
    let bx = Vector3::new(p0.1 .0, p1.1 .0, p2.1 .0);
    let by = Vector3::new(p0.1 .1, p1.1 .1, p2.1 .1);
    let rx = inv * bx;
    let ry = inv * by;
    Some(AffineTransform {
        m: [rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]],
    })
}

/// Least-squares affine over all pairs (normal equations; the two output
/// coordinates decouple).
fn least_squares(pairs: &[((f64, f64), (f64, f64))]) -> Option<AffineTransform> {
    if pairs.len() < 3 {
        return None;
    }
    let mut ata = Matrix3::zeros();
    let mut atb_x = Vector3::zeros();
    let mut atb_y = Vector3::zeros();
    for ((x, y), (u, v)) in pairs {
        let row = Vector3::new(*x, *y, 1.0);
        ata += row * row.transpose();
        atb_x += row * *u;
        atb_y += row * *v;
    }
    let inv = ata.try_inverse()?;
    let rx = inv * atb_x;
    let ry = inv * atb_y;
    Some(AffineTransform {
        m: [rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{noise_frame, textured_frame, translate_frame};

    #[test]
    fn identity_on_identical_frames() {
        let img = textured_frame(320, 240, 7);
        let t = estimate_affine(&img, &img, &RansacParams::default(), 0).unwrap();
        assert!(t.linear_deviation() < 1e-2, "{t:?}");
        assert!(t.m[2].abs() < 0.5 && t.m[5].abs() < 0.5, "{t:?}");
    }

    #[test]
    fn recovers_known_translation() {
        let img = textured_frame(320, 240, 8);
        let shifted = translate_frame(&img, 20, 0);
        let t = estimate_affine(&img, &shifted, &RansacParams::default(), 1).unwrap();
        assert!((t.m[2] - 20.0).abs() < 0.5, "tx = {}", t.m[2]);
        assert!(t.m[5].abs() < 0.5, "ty = {}", t.m[5]);
        assert!(t.linear_deviation() < 1e-2);
    }

    #[test]
    fn noise_frames_fail_to_align() {
        let a = noise_frame(160, 120, 1);
        let b = noise_frame(160, 120, 2);
        assert!(matches!(
            estimate_affine(&a, &b, &RansacParams::default(), 0),
            Err(VideoAttrError::AlignmentFailed { .. })
        ));
    }

    #[test]
    fn inverse_round_trip() {
        let t = AffineTransform {
            m: [1.1, 0.2, 5.0, -0.1, 0.9, -3.0],
        };
        let inv = t.inverse().unwrap();
        let (x, y) = t.apply(3.0, 4.0);
        let (bx, by) = inv.apply(x, y);
        assert!((bx - 3.0).abs() < 1e-12 && (by - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_about_center_fixes_center() {
        let t = AffineTransform::rotation_about(0.3, 50.0, 40.0);
        let (x, y) = t.apply(50.0, 40.0);
        assert!((x - 50.0).abs() < 1e-12 && (y - 40.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let img = textured_frame(256, 192, 9);
        let shifted = translate_frame(&img, 7, 5);
        let p = RansacParams::default();
        let t1 = estimate_affine(&img, &shifted, &p, 11).unwrap();
        let t2 = estimate_affine(&img, &shifted, &p, 11).unwrap();
        assert_eq!(t1, t2);
    }
}
