//! Calibration runs: measure attribute distributions over many seeds and
//! check low/high separation plus label accuracy.

use rayon::prelude::*;

use super::config::{Choice, MaskGenConfig, MaskRecipe};
use super::measure::measure_attributes;
use super::{generate_mask, label_mask, MaskGenError};
use crate::corpus::{Attribute, Setting};

/// Distribution summary for one (attribute, setting) run.
#[derive(Debug, Clone)]
pub struct CalibrationSummary {
    pub attribute: Attribute,
    pub setting: Setting,
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Fraction of seeds whose measured value labels as the intended setting.
    pub label_accuracy: f64,
}

/// Lower/upper quartiles and median (linear interpolation between order
/// statistics).
pub fn quartiles(values: &mut [f64]) -> (f64, f64, f64) {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let at = |q: f64| {
        let pos = q * (values.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let t = pos - lo as f64;
        values[lo] * (1.0 - t) + values[hi] * t
    };
    (at(0.25), at(0.5), at(0.75))
}

/// Generates `seeds` masks for each setting of `attribute` (the other two
/// attributes free) and summarizes the measured distribution of the
/// controlled attribute.
pub fn calibration_run(
    base: &MaskGenConfig,
    attribute: Attribute,
    seeds: u64,
) -> Result<[CalibrationSummary; 2], MaskGenError> {
    let mut out = Vec::with_capacity(2);
    for setting in Setting::BOTH {
        let recipe = MaskRecipe::free(base.recipe.width, base.recipe.height)
            .with(attribute, Choice::from_setting(setting));
        let config = MaskGenConfig::new(recipe, base.length, base.params.clone());
        config.validate()?;

        let results: Result<Vec<(f64, bool)>, MaskGenError> = (0..seeds)
            .into_par_iter()
            .map(|seed| {
                let mask = generate_mask(&config, seed, format!("cal_{seed}"))?;
                let measurement = measure_attributes(&mask)?;
                let labels = label_mask(&measurement, &config.params.labels)?;
                let correct = labels.get(attribute) == Some(setting);
                Ok((measurement.value(attribute).expect("mask attribute"), correct))
            })
            .collect();
        let results = results?;

        let mut values: Vec<f64> = results.iter().map(|(v, _)| *v).collect();
        let correct = results.iter().filter(|(_, c)| *c).count();
        let (q1, median, q3) = quartiles(&mut values);
        out.push(CalibrationSummary {
            attribute,
            setting,
            n: results.len(),
            q1,
            median,
            q3,
            label_accuracy: correct as f64 / results.len() as f64,
        });
    }
    Ok([out.remove(0), out.remove(0)])
}

/// True when the low run's IQR sits strictly below the high run's IQR.
pub fn iqr_disjoint(low: &CalibrationSummary, high: &CalibrationSummary) -> bool {
    low.q3 < high.q1
}
