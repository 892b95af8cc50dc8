//! Peak signal-to-noise ratio over 8-bit data.

use super::MetricError;

/// PSNR cap: exact matches would otherwise score infinity and poison
/// means.
pub const PSNR_CAP_DB: f64 = 100.0;

/// `10 log10(255^2 / MSE)` between equal-shape 8-bit buffers, capped at
/// `cap_db` (exact matches score the cap).
pub fn psnr(a: &[u8], b: &[u8], cap_db: f64) -> Result<f64, MetricError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(MetricError::ShapeMismatch(format!(
            "{} vs {} samples",
            a.len(),
            b.len()
        )));
    }
    let sq_err: u64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    if sq_err == 0 {
        return Ok(cap_db);
    }
    let mse = sq_err as f64 / a.len() as f64;
    Ok((10.0 * (255.0f64 * 255.0 / mse).log10()).min(cap_db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identical_buffers_hit_the_cap() {
        let a = vec![17u8; 100];
        assert_eq!(psnr(&a, &a, PSNR_CAP_DB).unwrap(), 100.0);
    }

    #[test]
    fn full_scale_error_is_zero_db() {
        let a = vec![0u8; 64];
        let b = vec![255u8; 64];
        let v = psnr(&a, &b, PSNR_CAP_DB).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn random_pair_matches_direct_mse() {
        let mut rng = crate::rng::stream(0, "psnr.test");
        let a: Vec<u8> = (0..500).map(|_| rng.random()).collect();
        let b: Vec<u8> = (0..500).map(|_| rng.random()).collect();
        let mse: f64 = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| ((x as f64) - (y as f64)).powi(2))
            .sum::<f64>()
            / 500.0;
        let expected = 10.0 * (255.0f64 * 255.0 / mse).log10();
        assert!((psnr(&a, &b, PSNR_CAP_DB).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(matches!(
            psnr(&[1, 2], &[1, 2, 3], PSNR_CAP_DB),
            Err(MetricError::ShapeMismatch(_))
        ));
    }
}
