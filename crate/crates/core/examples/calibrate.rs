//! Runs the mask-generator calibration sweep and prints per-setting
//! distribution summaries. Used to select and audit the bundled parameter
//! banks.
//!
//! Usage: `cargo run --release -p dive-core --example calibrate [seeds] [w] [h] [t]`

use dive_core::corpus::Attribute;
use dive_core::maskgen::{calibration_run, iqr_disjoint, MaskGenConfig, MaskGenParams, MaskRecipe};

fn main() {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(200, |s| s.parse().unwrap());
    let width: u32 = args.next().map_or(832, |s| s.parse().unwrap());
    let height: u32 = args.next().map_or(480, |s| s.parse().unwrap());
    let length: usize = args.next().map_or(60, |s| s.parse().unwrap());

    let config = MaskGenConfig::new(
        MaskRecipe::free(width, height),
        length,
        MaskGenParams::calibrated_default(),
    );
    let start = std::time::Instant::now();
    let mut all_ok = true;
    for attribute in Attribute::MASK {
        let [low, high] = calibration_run(&config, attribute, seeds).unwrap();
        let disjoint = iqr_disjoint(&low, &high);
        all_ok &= disjoint && low.label_accuracy >= 0.95 && high.label_accuracy >= 0.95;
        println!("{attribute}:");
        for s in [&low, &high] {
            println!(
                "  {:<4} n={} q1={:.5} med={:.5} q3={:.5} label_acc={:.1}%",
                s.setting.to_string(),
                s.n,
                s.q1,
                s.median,
                s.q3,
                100.0 * s.label_accuracy
            );
        }
        println!("  IQRs disjoint: {disjoint}");
    }
    println!(
        "elapsed: {:.1}s; separation + accuracy criteria met: {all_ok}",
        start.elapsed().as_secs_f64()
    );
}
