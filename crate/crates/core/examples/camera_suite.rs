//! Scores the synthetic camera-motion validation suite and prints per-clip
//! compatibilities, label decisions, and the precision-recall AUC. Used to
//! audit the default thresholds.

use dive_core::corpus::Setting;
use dive_core::videoattr::suite::{average_precision, validation_suite};
use dive_core::videoattr::{
    classify_camera_motion, CameraMotionThresholds, CompatibilityMode, RansacParams,
};

fn main() {
    let thresholds = CameraMotionThresholds::default();
    let params = RansacParams::default();
    let start = std::time::Instant::now();
    let mut scored = Vec::new();
    for labeled in validation_suite(0) {
        let result = classify_camera_motion(
            &labeled.clip,
            &thresholds,
            &params,
            CompatibilityMode::default(),
            7,
        )
        .unwrap();
        println!(
            "{:<10} truth={:<4} total={:.4} label={:?}",
            labeled.clip.id,
            labeled.truth.to_string(),
            result.total_compatibility,
            result.label
        );
        scored.push((
            1.0 - result.total_compatibility,
            labeled.truth == Setting::High,
        ));
    }
    println!("PR-AUC: {:.4}", average_precision(&scored));
    println!("elapsed: {:.1}s", start.elapsed().as_secs_f64());
}
