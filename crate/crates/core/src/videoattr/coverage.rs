//! Warp coverage: how much of the target canvas a warped frame misses.

use super::affine::AffineTransform;
use super::VideoAttrError;

/// Fractions below this are numerical noise from the polygon arithmetic
/// (one pixel of a 832x480 canvas is ~2.5e-6) and collapse to exactly 0,
/// so estimated transforms that differ from the identity only by solver
/// roundoff report perfect coverage.
const NOISE_FLOOR: f64 = 1e-7;

/// Fraction of the `width` x `height` target canvas *not* covered by the
/// source frame warped with `transform`. Computed analytically from the
/// warped frame polygon, so it is exact and resolution-independent.
pub fn invalid_fraction(
    transform: &AffineTransform,
    width: u32,
    height: u32,
) -> Result<f64, VideoAttrError> {
    if transform.determinant().abs() < 1e-12 {
        return Err(VideoAttrError::NonInvertible);
    }
    let (w, h) = (width as f64, height as f64);
    let corners = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)];
    let warped: Vec<(f64, f64)> = corners
        .iter()
        .map(|&(x, y)| transform.apply(x, y))
        .collect();
    let clipped = clip_to_canvas(&warped, w, h);
    let covered = polygon_area(&clipped);
    let fraction = (1.0 - covered / (w * h)).clamp(0.0, 1.0);
    Ok(if fraction < NOISE_FLOOR { 0.0 } else { fraction })
}

/// Sutherland-Hodgman clip of a convex polygon against the canvas
/// rectangle [0, w] x [0, h].
fn clip_to_canvas(polygon: &[(f64, f64)], w: f64, h: f64) -> Vec<(f64, f64)> {
    // Each half-plane as (a, b, c): keep points with a*x + b*y <= c.
    let planes = [
        (-1.0, 0.0, 0.0), // x >= 0
        (1.0, 0.0, w),    // x <= w
        (0.0, -1.0, 0.0), // y >= 0
        (0.0, 1.0, h),    // y <= h
    ];
    let mut poly: Vec<(f64, f64)> = polygon.to_vec();
    for (a, b, c) in planes {
        if poly.is_empty() {
            break;
        }
        let mut next = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let current = poly[i];
            let previous = poly[(i + poly.len() - 1) % poly.len()];
            let side = |p: (f64, f64)| a * p.0 + b * p.1 - c;
            let (sc, sp) = (side(current), side(previous));
            if sc <= 0.0 {
                if sp > 0.0 {
                    next.push(intersect(previous, current, sp, sc));
                }
                next.push(current);
            } else if sp <= 0.0 {
                next.push(intersect(previous, current, sp, sc));
            }
        }
        poly = next;
    }
    poly
}

fn intersect(p: (f64, f64), q: (f64, f64), sp: f64, sq: f64) -> (f64, f64) {
    let t = sp / (sp - sq);
    (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
}

/// Shoelace area (absolute value).
fn polygon_area(polygon: &[(f64, f64)]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..polygon.len() {
        let (x0, y0) = polygon[i];
        let (x1, y1) = polygon[(i + 1) % polygon.len()];
        acc += x0 * y1 - x1 * y0;
    }
    acc.abs() / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rasterized-coverage oracle at `ss`-fold supersampling.
    fn coverage_oracle(transform: &AffineTransform, w: u32, h: u32, ss: u32) -> f64 {
        let inv = transform.inverse().unwrap();
        let mut uncovered = 0u64;
        let total = (w * ss) as u64 * (h * ss) as u64;
        for y in 0..h * ss {
            for x in 0..w * ss {
                let px = (x as f64 + 0.5) / ss as f64;
                let py = (y as f64 + 0.5) / ss as f64;
                let (sx, sy) = inv.apply(px, py);
                if sx < 0.0 || sx > w as f64 || sy < 0.0 || sy > h as f64 {
                    uncovered += 1;
                }
            }
        }
        uncovered as f64 / total as f64
    }

    #[test]
    fn identity_covers_everything() {
        let f = invalid_fraction(&AffineTransform::identity(), 640, 480).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn axis_shift_is_analytic() {
        let t = AffineTransform::translation(0.2 * 640.0, 0.0);
        let f = invalid_fraction(&t, 640, 480).unwrap();
        assert!((f - 0.2).abs() < 1e-12, "{f}");
    }

    #[test]
    fn rotation_matches_supersampled_oracle() {
        for &theta in &[0.1f64, 0.35, 0.8] {
            let t = AffineTransform::rotation_about(theta, 64.0, 48.0);
            let f = invalid_fraction(&t, 128, 96).unwrap();
            let oracle = coverage_oracle(&t, 128, 96, 4);
            assert!((f - oracle).abs() < 5e-3, "theta {theta}: {f} vs {oracle}");
        }
    }

    #[test]
    fn degenerate_transform_errors() {
        let t = AffineTransform {
            m: [0.0, 0.0, 1.0, 0.0, 0.0, 2.0],
        };
        assert!(matches!(
            invalid_fraction(&t, 10, 10),
            Err(VideoAttrError::NonInvertible)
        ));
    }

    #[test]
    fn fraction_stays_in_unit_interval() {
        let t = AffineTransform::translation(1e6, 1e6);
        let f = invalid_fraction(&t, 64, 64).unwrap();
        assert_eq!(f, 1.0);
    }
}
