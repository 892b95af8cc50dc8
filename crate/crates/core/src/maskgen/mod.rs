//! Procedural occlusion-mask generation with attribute control, plus
//! independent measurement of the controlled attributes.
//!
//! Masks are blobs drawn by connecting control points with a thick stroke
//! and animating the points: a shared initial velocity (FG displacement),
//! random per-point accelerations (FG pose motion), and stroke width plus a
//! centroid-distance bound (FG size). All linear parameters are fractions
//! of the frame diagonal so one calibration transfers across resolutions.

mod calibrate;
mod config;
mod generate;
mod measure;

pub use calibrate::{calibration_run, iqr_disjoint, quartiles, CalibrationSummary};
pub use config::{
    AttributeBands, Choice, LabelThresholds, MaskGenConfig, MaskGenParams, MaskRecipe,
    PerturbationParams,
};
pub use generate::generate_mask;
pub use measure::{label_mask, measure_attributes, MaskAttributeMeasurement};

/// Errors from mask generation, measurement, and labeling.
#[derive(Debug, thiserror::Error)]
pub enum MaskGenError {
    #[error("invalid mask generator config: {0}")]
    InvalidConfig(String),
    #[error("invalid label thresholds: {0}")]
    InvalidThresholds(String),
    #[error("mask frame {frame} has no occluded pixels; centroid undefined")]
    EmptyFrame { frame: usize },
    #[error("rasterization produced an empty frame in {attempts} attempts")]
    Degenerate { attempts: u32 },
}
