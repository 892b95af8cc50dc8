//! The five-metric quality suite: LPIPS and PVCS (reconstruction), FID and
//! VFID (realism), PCons (temporal consistency), plus their mathematical
//! kernels (perceptual distance, Fréchet distance, PSNR).

mod fid;
mod frechet;
mod pcons;
mod perceptual;
mod psnr;

pub use fid::{fid, vfid, RealismScore};
pub use frechet::{fit_gaussian, frechet_distance, EmbeddingAccumulator, GaussianSummary};
pub use pcons::{pcons_video, PconsParams};
pub use perceptual::{
    load_lpips_weights, lpips_video, perceptual_distance, pvcs_video, LayerWeights,
};
pub use psnr::{psnr, PSNR_CAP_DB};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("feature schemas do not match: {0}")]
    SchemaMismatch(String),
    #[error("videos differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least {need} frames, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("empty input set")]
    EmptySet,
    #[error("gaussian dimensions differ: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("matrix square root failed after regularization")]
    SqrtFailure,
    #[error("mask frame {frame} is empty; patch centroid undefined")]
    EmptyMaskFrame { frame: usize },
    #[error("frame {width}x{height} smaller than the {patch}x{patch} patch")]
    FrameTooSmall {
        width: u32,
        height: u32,
        patch: usize,
    },
    #[error("bad layer weights: {0}")]
    BadWeights(String),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
}

/// Whether smaller or larger scores indicate better quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

/// The five benchmark metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Lpips,
    Pvcs,
    Fid,
    Vfid,
    Pcons,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        MetricId::Lpips,
        MetricId::Pvcs,
        MetricId::Fid,
        MetricId::Vfid,
        MetricId::Pcons,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Lpips => "lpips",
            MetricId::Pvcs => "pvcs",
            MetricId::Fid => "fid",
            MetricId::Vfid => "vfid",
            MetricId::Pcons => "pcons",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            MetricId::Pcons => Direction::HigherBetter,
            _ => Direction::LowerBetter,
        }
    }

    /// Slice-level metrics pool frames/videos across the whole slice;
    /// the rest score each pair separately.
    pub fn is_slice_level(self) -> bool {
        matches!(self, MetricId::Fid | MetricId::Vfid)
    }

    pub fn unit_note(self) -> &'static str {
        match self {
            MetricId::Lpips | MetricId::Pvcs => "perceptual feature distance",
            MetricId::Fid | MetricId::Vfid => "Fréchet distance between embedding Gaussians",
            MetricId::Pcons => "dB, capped at 100",
        }
    }
}

impl std::fmt::Display for MetricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lpips" => Ok(MetricId::Lpips),
            "pvcs" => Ok(MetricId::Pvcs),
            "fid" => Ok(MetricId::Fid),
            "vfid" => Ok(MetricId::Vfid),
            "pcons" => Ok(MetricId::Pcons),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

/// One scored metric value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric: MetricId,
    pub value: f64,
}

impl MetricScore {
    pub fn new(metric: MetricId, value: f64) -> Self {
        Self { metric, value }
    }

    pub fn direction(&self) -> Direction {
        self.metric.direction()
    }
}
