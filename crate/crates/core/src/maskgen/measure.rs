//! Attribute measurement on arbitrary mask sequences, independent of how
//! they were generated.

use super::config::LabelThresholds;
use super::MaskGenError;
use crate::corpus::{Attribute, AttributeLabel, LabelSet, MaskFrame, MaskSequence};

/// Measured values of the three mask attributes.
///
/// * `fg_size`: mean fraction of occluded pixels per frame.
/// * `fg_displacement`: mean per-frame centroid displacement, as a fraction
///   of the frame diagonal.
/// * `fg_pose_motion`: mean per-frame shape change after centroid
///   alignment — the symmetric-difference area of consecutive frames with
///   their centroids brought into coincidence, normalized by the pair's
///   mean mask area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskAttributeMeasurement {
    pub fg_size: f64,
    pub fg_displacement: f64,
    pub fg_pose_motion: f64,
}

impl MaskAttributeMeasurement {
    pub fn value(&self, attribute: Attribute) -> Option<f64> {
        match attribute {
            Attribute::FgSize => Some(self.fg_size),
            Attribute::FgDisplacement => Some(self.fg_displacement),
            Attribute::FgPoseMotion => Some(self.fg_pose_motion),
            _ => None,
        }
    }
}

/// Measures the three mask attributes. Errors on any frame with zero
/// occluded pixels since the centroid is then undefined.
pub fn measure_attributes(mask: &MaskSequence) -> Result<MaskAttributeMeasurement, MaskGenError> {
    assert!(!mask.is_empty(), "mask must have at least one frame");
    let pixels = (mask.width() as f64) * (mask.height() as f64);
    let diagonal = (mask.width() as f64).hypot(mask.height() as f64);

    let mut centroids = Vec::with_capacity(mask.len());
    let mut areas = Vec::with_capacity(mask.len());
    for (t, frame) in mask.frames.iter().enumerate() {
        let centroid = frame
            .centroid()
            .ok_or(MaskGenError::EmptyFrame { frame: t })?;
        centroids.push(centroid);
        areas.push(frame.area() as f64);
    }

    let fg_size = areas.iter().sum::<f64>() / (areas.len() as f64 * pixels);

    let (mut displacement, mut pose_motion) = (0.0, 0.0);
    if mask.len() > 1 {
        let pairs = (mask.len() - 1) as f64;
        for t in 0..mask.len() - 1 {
            let (ca, cb) = (centroids[t], centroids[t + 1]);
            displacement += (cb.0 - ca.0).hypot(cb.1 - ca.1);

            // Shift frame t so the centroids coincide, then count the
            // symmetric difference over the whole plane:
            // |A_shifted Δ B| = |A| + |B| - 2 |A_shifted ∩ B|.
            let shift = ((cb.0 - ca.0).round() as i64, (cb.1 - ca.1).round() as i64);
            let inter = shifted_intersection(&mask.frames[t], &mask.frames[t + 1], shift);
            let symdiff = areas[t] + areas[t + 1] - 2.0 * inter as f64;
            let mean_area = 0.5 * (areas[t] + areas[t + 1]);
            pose_motion += symdiff / mean_area;
        }
        displacement /= pairs * diagonal;
        pose_motion /= pairs;
    }

    Ok(MaskAttributeMeasurement {
        fg_size,
        fg_displacement: displacement,
        fg_pose_motion: pose_motion,
    })
}

/// Occluded-pixel overlap between `a` translated by `shift` and `b`.
fn shifted_intersection(a: &MaskFrame, b: &MaskFrame, shift: (i64, i64)) -> u64 {
    let (w, h) = (b.width() as i64, b.height() as i64);
    let mut count = 0u64;
    // Iterate only rows/cols where the shifted copy of `a` overlaps `b`.
    let y_start = shift.1.max(0);
    let y_end = (h + shift.1.min(0)).max(y_start);
    let x_start = shift.0.max(0);
    let x_end = (w + shift.0.min(0)).max(x_start);
    for y in y_start..y_end {
        let ay = y - shift.1;
        let b_row = &b.data()[(y * w) as usize..(y * w + w) as usize];
        let a_row = &a.data()[(ay * w) as usize..(ay * w + w) as usize];
        for x in x_start..x_end {
            count += (b_row[x as usize] & a_row[(x - shift.0) as usize]) as u64;
        }
    }
    count
}

/// Assigns labels from measured values using threshold bands; measurements
/// inside the gap between bands get no label for that attribute.
pub fn label_mask(
    measurement: &MaskAttributeMeasurement,
    thresholds: &LabelThresholds,
) -> Result<LabelSet, MaskGenError> {
    thresholds.validate()?;
    let mut labels = LabelSet::new();
    for attribute in Attribute::MASK {
        let bands = thresholds.bands(attribute).expect("mask attribute");
        let value = measurement.value(attribute).expect("mask attribute");
        if let Some(setting) = bands.classify(value) {
            labels
                .insert(AttributeLabel::new(attribute, setting))
                .expect("fresh label set has no conflicts");
        }
    }
    Ok(labels)
}
