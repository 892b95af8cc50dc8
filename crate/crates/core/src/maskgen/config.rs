//! Generator configuration: attribute settings, parameter banks, and label
//! threshold bands.

use serde::{Deserialize, Serialize};

use super::MaskGenError;
use crate::corpus::{Attribute, Setting};

/// Target setting for one controllable attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Low,
    High,
    /// Sample the low or high band with equal probability.
    Free,
}

impl Choice {
    pub fn from_setting(setting: Setting) -> Self {
        match setting {
            Setting::Low => Choice::Low,
            Setting::High => Choice::High,
        }
    }
}

/// What to render: frame size plus the three mask-attribute settings.
/// Stored in manifests so a mask can be re-rendered at a paired clip's
/// exact length from its seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRecipe {
    pub width: u32,
    pub height: u32,
    pub fg_size: Choice,
    pub fg_displacement: Choice,
    pub fg_pose_motion: Choice,
}

impl MaskRecipe {
    pub fn free(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            fg_size: Choice::Free,
            fg_displacement: Choice::Free,
            fg_pose_motion: Choice::Free,
        }
    }

    pub fn with(mut self, attribute: Attribute, choice: Choice) -> Self {
        match attribute {
            Attribute::FgSize => self.fg_size = choice,
            Attribute::FgDisplacement => self.fg_displacement = choice,
            Attribute::FgPoseMotion => self.fg_pose_motion = choice,
            _ => {}
        }
        self
    }
}

/// `[min, max]` band, in fractions of the frame diagonal.
pub type Band = [f64; 2];

/// Low/high parameter bands for one attribute-controlled quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPair {
    pub low: Band,
    pub high: Band,
}

impl BandPair {
    pub fn band(&self, choice_is_high: bool) -> Band {
        if choice_is_high {
            self.high
        } else {
            self.low
        }
    }
}

/// Per-frame random acceleration applied to control points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    /// Probability that a control point accelerates this frame.
    pub prob: f64,
    /// Acceleration magnitude band, diagonal fractions per frame².
    pub magnitude_frac: Band,
}

/// Calibrated parameter banks shared by all recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskGenParams {
    pub version: u32,
    /// Inclusive control-point count range.
    pub control_points: [usize; 2],
    /// Stroke width bands per FG size setting, as diagonal fractions.
    pub stroke_width_frac: BandPair,
    /// Max control-point-to-centroid radius bands per FG size setting.
    pub max_radius_frac: BandPair,
    /// Initial mask speed bands per FG displacement setting (per frame).
    pub initial_speed_frac: BandPair,
    /// Control-point stochasticity per FG pose motion setting.
    pub perturbation_low: PerturbationParams,
    pub perturbation_high: PerturbationParams,
    /// Pull applied to points beyond the radius, per frame².
    pub inward_accel_frac: f64,
    /// Probability of reversing the finished sequence in time.
    pub reversal_prob: f64,
    /// Direction-momentum weight of the initial control-point walk; 0 is a
    /// fully random walk, values near 1 approach a straight line.
    pub momentum_bias: f64,
    /// Cap on a point's speed relative to the mask's mean velocity.
    pub relative_speed_cap_frac: f64,
    /// Per-frame decay of relative velocities; keeps shape change
    /// stationary instead of accumulating.
    pub relative_damping: f64,
    /// Measurement bands used to label generated masks.
    pub labels: LabelThresholds,
}

impl MaskGenParams {
    /// The calibrated defaults committed with the crate.
    pub fn calibrated_default() -> Self {
        static DEFAULT: &str = include_str!("../../configs/maskgen-default.toml");
        toml::from_str(DEFAULT).expect("bundled maskgen config is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, MaskGenError> {
        toml::from_str(text).map_err(|e| MaskGenError::InvalidConfig(e.to_string()))
    }

    pub fn perturbation(&self, choice_is_high: bool) -> PerturbationParams {
        if choice_is_high {
            self.perturbation_high
        } else {
            self.perturbation_low
        }
    }
}

/// Full generator input: what to render, how long, and with which banks.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskGenConfig {
    pub recipe: MaskRecipe,
    pub length: usize,
    pub params: MaskGenParams,
}

impl MaskGenConfig {
    pub fn new(recipe: MaskRecipe, length: usize, params: MaskGenParams) -> Self {
        Self {
            recipe,
            length,
            params,
        }
    }

    pub fn diagonal(&self) -> f64 {
        let (w, h) = (self.recipe.width as f64, self.recipe.height as f64);
        w.hypot(h)
    }

    pub fn validate(&self) -> Result<(), MaskGenError> {
        let p = &self.params;
        if self.length == 0 {
            return Err(MaskGenError::InvalidConfig("length must be >= 1".into()));
        }
        if self.recipe.width == 0 || self.recipe.height == 0 {
            return Err(MaskGenError::InvalidConfig("zero frame size".into()));
        }
        if p.control_points[0] == 0 || p.control_points[0] > p.control_points[1] {
            return Err(MaskGenError::InvalidConfig(format!(
                "bad control point range {:?}",
                p.control_points
            )));
        }
        for (name, band) in [
            ("stroke_width.low", p.stroke_width_frac.low),
            ("stroke_width.high", p.stroke_width_frac.high),
            ("max_radius.low", p.max_radius_frac.low),
            ("max_radius.high", p.max_radius_frac.high),
            ("initial_speed.low", p.initial_speed_frac.low),
            ("initial_speed.high", p.initial_speed_frac.high),
            ("perturbation.low.magnitude", p.perturbation_low.magnitude_frac),
            ("perturbation.high.magnitude", p.perturbation_high.magnitude_frac),
        ] {
            if band[0] < 0.0 || band[1] < band[0] {
                return Err(MaskGenError::InvalidConfig(format!(
                    "band {name} = {band:?} is empty or negative"
                )));
            }
        }
        if !(0.0..=1.0).contains(&p.reversal_prob) {
            return Err(MaskGenError::InvalidConfig(format!(
                "reversal probability {} outside [0, 1]",
                p.reversal_prob
            )));
        }
        for (name, prob) in [
            ("perturbation.low.prob", p.perturbation_low.prob),
            ("perturbation.high.prob", p.perturbation_high.prob),
        ] {
            if !(0.0..=1.0).contains(&prob) {
                return Err(MaskGenError::InvalidConfig(format!(
                    "{name} = {prob} outside [0, 1]"
                )));
            }
        }
        if !(0.0..1.0).contains(&p.momentum_bias) {
            return Err(MaskGenError::InvalidConfig(format!(
                "momentum bias {} outside [0, 1)",
                p.momentum_bias
            )));
        }
        if !(0.0..=1.0).contains(&p.relative_damping) {
            return Err(MaskGenError::InvalidConfig(format!(
                "relative damping {} outside [0, 1]",
                p.relative_damping
            )));
        }
        let diag = self.diagonal();
        let stroke_upper = p.stroke_width_frac.low[1].max(p.stroke_width_frac.high[1]) * diag;
        let min_side = self.recipe.width.min(self.recipe.height) as f64;
        if stroke_upper > min_side {
            return Err(MaskGenError::InvalidConfig(format!(
                "stroke width can reach {stroke_upper:.1}px, larger than the \
                 {min_side:.0}px frame side"
            )));
        }
        for (which, radius, stroke) in [
            ("low", p.max_radius_frac.low, p.stroke_width_frac.low),
            ("high", p.max_radius_frac.high, p.stroke_width_frac.high),
        ] {
            if radius[0] < stroke[1] / 2.0 {
                return Err(MaskGenError::InvalidConfig(format!(
                    "fg_size {which}: radius band {radius:?} smaller than half the \
                     stroke band {stroke:?}"
                )));
            }
        }
        self.params.labels.validate()?;
        Ok(())
    }
}

/// One attribute's low/high decision bands over measured values: `low` when
/// the measurement is at most `low_max`, `high` at or above `high_min`, and
/// no label in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeBands {
    pub low_max: f64,
    pub high_min: f64,
}

impl AttributeBands {
    pub fn classify(&self, value: f64) -> Option<Setting> {
        if value <= self.low_max {
            Some(Setting::Low)
        } else if value >= self.high_min {
            Some(Setting::High)
        } else {
            None
        }
    }
}

/// Measurement-space decision bands for the three mask attributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelThresholds {
    pub fg_size: AttributeBands,
    pub fg_displacement: AttributeBands,
    pub fg_pose_motion: AttributeBands,
}

impl LabelThresholds {
    pub fn bands(&self, attribute: Attribute) -> Option<AttributeBands> {
        match attribute {
            Attribute::FgSize => Some(self.fg_size),
            Attribute::FgDisplacement => Some(self.fg_displacement),
            Attribute::FgPoseMotion => Some(self.fg_pose_motion),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), MaskGenError> {
        for (name, bands) in [
            ("fg_size", self.fg_size),
            ("fg_displacement", self.fg_displacement),
            ("fg_pose_motion", self.fg_pose_motion),
        ] {
            if !(bands.low_max >= 0.0 && bands.low_max < bands.high_min) {
                return Err(MaskGenError::InvalidThresholds(format!(
                    "{name}: low band ceiling {} must sit below high band floor {}",
                    bands.low_max, bands.high_min
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_default_is_valid() {
        let params = MaskGenParams::calibrated_default();
        let config = MaskGenConfig::new(MaskRecipe::free(832, 480), 60, params);
        config.validate().unwrap();
    }

    #[test]
    fn radius_below_stroke_is_infeasible() {
        let mut params = MaskGenParams::calibrated_default();
        params.max_radius_frac.low = [0.001, 0.002];
        let config = MaskGenConfig::new(MaskRecipe::free(832, 480), 10, params);
        assert!(matches!(
            config.validate(),
            Err(MaskGenError::InvalidConfig(_))
        ));
    }

    #[test]
    fn overlapping_label_bands_rejected() {
        let mut params = MaskGenParams::calibrated_default();
        params.labels.fg_size = AttributeBands {
            low_max: 0.2,
            high_min: 0.1,
        };
        let config = MaskGenConfig::new(MaskRecipe::free(832, 480), 10, params);
        assert!(matches!(
            config.validate(),
            Err(MaskGenError::InvalidThresholds(_))
        ));
    }
}
