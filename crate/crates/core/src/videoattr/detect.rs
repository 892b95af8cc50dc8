//! Multi-scale corner detection, patch descriptors, and matching.
//!
//! Backs the affine alignment proxy with a repeatable local feature
//! pipeline: Harris corners over a Gaussian pyramid, mean/contrast
//! normalized patch descriptors, and mutual nearest-neighbor matching with
//! a distance-ratio test. The detector is a replaceable component; only
//! repeatability across small viewpoint changes matters here.

use image::RgbImage;

/// Grayscale image with f32 pixels on a 0..255 scale.
#[derive(Debug, Clone)]
pub struct GrayF32 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl GrayF32 {
    pub fn from_rgb(img: &RgbImage) -> Self {
        let (w, h) = img.dimensions();
        let data = img
            .pixels()
            .map(|p| 0.299 * p.0[0] as f32 + 0.587 * p.0[1] as f32 + 0.114 * p.0[2] as f32)
            .collect();
        Self {
            width: w as usize,
            height: h as usize,
            data,
        }
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Bilinear sample with edge clamping.
    fn sample(&self, x: f32, y: f32) -> f32 {
        let x = x.clamp(0.0, (self.width - 1) as f32);
        let y = y.clamp(0.0, (self.height - 1) as f32);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let (tx, ty) = (x - x0 as f32, y - y0 as f32);
        let top = self.at(x0, y0) * (1.0 - tx) + self.at(x1, y0) * tx;
        let bottom = self.at(x0, y1) * (1.0 - tx) + self.at(x1, y1) * tx;
        top * (1.0 - ty) + bottom * ty
    }

    fn blur(&self, sigma: f32) -> GrayF32 {
        let radius = (3.0 * sigma).ceil() as i64;
        let kernel: Vec<f32> = (-radius..=radius)
            .map(|i| (-((i * i) as f32) / (2.0 * sigma * sigma)).exp())
            .collect();
        let norm: f32 = kernel.iter().sum();
        let kernel: Vec<f32> = kernel.iter().map(|k| k / norm).collect();
        let (w, h) = (self.width, self.height);
        let clamp_x = |v: i64| v.clamp(0, w as i64 - 1) as usize;
        let clamp_y = |v: i64| v.clamp(0, h as i64 - 1) as usize;

        let mut horizontal = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    let sx = clamp_x(x as i64 + i as i64 - radius);
                    acc += k * self.at(sx, y);
                }
                horizontal[y * w + x] = acc;
            }
        }
        let mut out = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    let sy = clamp_y(y as i64 + i as i64 - radius);
                    acc += k * horizontal[sy * w + x];
                }
                out[y * w + x] = acc;
            }
        }
        GrayF32 {
            width: w,
            height: h,
            data: out,
        }
    }

    fn half(&self) -> GrayF32 {
        let (w, h) = (self.width / 2, self.height / 2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let s = self.at(2 * x, 2 * y)
                    + self.at(2 * x + 1, 2 * y)
                    + self.at(2 * x, 2 * y + 1)
                    + self.at(2 * x + 1, 2 * y + 1);
                data.push(s / 4.0);
            }
        }
        GrayF32 {
            width: w,
            height: h,
            data,
        }
    }
}

pub const DESCRIPTOR_LEN: usize = 64;

/// A detected corner with its normalized patch descriptor, in base-image
/// pixel coordinates.
#[derive(Debug, Clone)]
pub struct Feature {
    pub x: f64,
    pub y: f64,
    pub response: f32,
    pub descriptor: [f32; DESCRIPTOR_LEN],
}

#[derive(Debug, Clone)]
pub struct DetectParams {
    pub octaves: usize,
    pub max_features: usize,
    /// Corner response threshold relative to the strongest corner.
    pub relative_threshold: f32,
    /// Nearest/second-nearest distance ratio accepted by matching.
    pub match_ratio: f32,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            octaves: 3,
            max_features: 400,
            relative_threshold: 0.01,
            match_ratio: 0.8,
        }
    }
}

/// Detects corners over a Gaussian pyramid and attaches descriptors.
pub fn detect_features(img: &RgbImage, params: &DetectParams) -> Vec<Feature> {
    let mut features = Vec::new();
    let mut level = GrayF32::from_rgb(img).blur(1.0);
    for octave in 0..params.octaves {
        if level.width < 24 || level.height < 24 {
            break;
        }
        let scale = (1 << octave) as f64;
        harris_corners(&level, params, scale, &mut features);
        if octave + 1 < params.octaves {
            level = level.blur(1.2).half();
        }
    }
    features.sort_by(|a, b| b.response.total_cmp(&a.response));
    features.truncate(params.max_features);
    features
}

fn harris_corners(level: &GrayF32, params: &DetectParams, scale: f64, out: &mut Vec<Feature>) {
    let (w, h) = (level.width, level.height);
    let mut ixx = vec![0.0f32; w * h];
    let mut iyy = vec![0.0f32; w * h];
    let mut ixy = vec![0.0f32; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let dx = (level.at(x + 1, y) - level.at(x - 1, y)) / 2.0;
            let dy = (level.at(x, y + 1) - level.at(x, y - 1)) / 2.0;
            ixx[y * w + x] = dx * dx;
            iyy[y * w + x] = dy * dy;
            ixy[y * w + x] = dx * dy;
        }
    }
    let wrap = |data: Vec<f32>| GrayF32 {
        width: w,
        height: h,
        data,
    };
    let (ixx, iyy, ixy) = (
        wrap(ixx).blur(1.5),
        wrap(iyy).blur(1.5),
        wrap(ixy).blur(1.5),
    );

    let mut response = vec![0.0f32; w * h];
    for i in 0..w * h {
        let (a, b, c) = (ixx.data[i], iyy.data[i], ixy.data[i]);
        response[i] = (a * b - c * c) - 0.04 * (a + b) * (a + b);
    }
    let max_response = response.iter().cloned().fold(0.0f32, f32::max);
    if max_response <= 0.0 {
        return;
    }
    let threshold = params.relative_threshold * max_response;

    // Descriptor patch: 8x8 samples spaced 2px, so a 16px margin is needed.
    let margin = 9usize;
    for y in margin..h - margin {
        for x in margin..w - margin {
            let r = response[y * w + x];
            if r < threshold {
                continue;
            }
            let mut is_peak = true;
            'nms: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if (dx, dy) == (0, 0) {
                        continue;
                    }
                    let neighbor =
                        response[((y as i64 + dy) as usize) * w + (x as i64 + dx) as usize];
                    if neighbor > r {
                        is_peak = false;
                        break 'nms;
                    }
                }
            }
            if !is_peak {
                continue;
            }
            if let Some(descriptor) = describe(level, x, y) {
                out.push(Feature {
                    x: (x as f64 + 0.5) * scale - 0.5,
                    y: (y as f64 + 0.5) * scale - 0.5,
                    response: r,
                    descriptor,
                });
            }
        }
    }
}

/// 8x8 patch sampled on a 2px grid, zero-mean and L2-normalized. Flat
/// patches carry no signal and are rejected.
fn describe(level: &GrayF32, cx: usize, cy: usize) -> Option<[f32; DESCRIPTOR_LEN]> {
    let mut d = [0.0f32; DESCRIPTOR_LEN];
    let mut idx = 0;
    for gy in 0..8 {
        for gx in 0..8 {
            let sx = cx as f32 + (gx as f32 - 3.5) * 2.0;
            let sy = cy as f32 + (gy as f32 - 3.5) * 2.0;
            d[idx] = level.sample(sx, sy);
            idx += 1;
        }
    }
    let mean = d.iter().sum::<f32>() / DESCRIPTOR_LEN as f32;
    for v in &mut d {
        *v -= mean;
    }
    let norm = d.iter().map(|v| v * v).sum::<f32>().sqrt();
    if norm < 1.0 {
        return None;
    }
    for v in &mut d {
        *v /= norm;
    }
    Some(d)
}

/// Index pairs (a, b) of mutual nearest neighbors passing the ratio test.
pub fn match_features(a: &[Feature], b: &[Feature], ratio: f32) -> Vec<(usize, usize)> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let forward: Vec<Option<usize>> = a.iter().map(|fa| best_match(fa, b, ratio)).collect();
    let backward: Vec<Option<usize>> = b.iter().map(|fb| best_match(fb, a, ratio)).collect();
    forward
        .iter()
        .enumerate()
        .filter_map(|(ia, m)| {
            let ib = (*m)?;
            (backward[ib] == Some(ia)).then_some((ia, ib))
        })
        .collect()
}

fn best_match(f: &Feature, candidates: &[Feature], ratio: f32) -> Option<usize> {
    let mut best = (f32::INFINITY, usize::MAX);
    let mut second = f32::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let dist: f32 = f
            .descriptor
            .iter()
            .zip(&c.descriptor)
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        if dist < best.0 {
            second = best.0;
            best = (dist, i);
        } else if dist < second {
            second = dist;
        }
    }
    if best.1 == usize::MAX {
        return None;
    }
    // With one candidate there is no second distance to compare against.
    if second.is_finite() && best.0 >= ratio * ratio * second {
        return None;
    }
    Some(best.1)
}
