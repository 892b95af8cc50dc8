//! Synthetic clip and frame generators.
//!
//! These back the camera-motion validation suite and the test kit: textured
//! stills with repeatable local structure, panned crops with known ground
//! truth, and simple solid/noise frames.

use image::RgbImage;
use rand::Rng;

use crate::corpus::VideoClip;
use crate::rng;

/// A single solid-color frame.
pub fn solid_frame(width: u32, height: u32, rgb: [u8; 3]) -> RgbImage {
    RgbImage::from_pixel(width, height, image::Rgb(rgb))
}

/// A frame of independent uniform noise.
pub fn noise_frame(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = rng::stream(seed, "synth.noise");
    let mut img = RgbImage::new(width, height);
    for p in img.pixels_mut() {
        p.0 = [rng.random(), rng.random(), rng.random()];
    }
    img
}

/// A procedurally textured still with structure at several scales, suitable
/// for feature detection. Deterministic in (size, seed).
pub fn textured_frame(width: u32, height: u32, seed: u64) -> RgbImage {
    // Multi-octave value noise: bilinear interpolation of seeded lattices.
    let octaves: &[(u32, f32)] = &[(4, 0.35), (8, 0.25), (16, 0.2), (32, 0.2)];
    let mut lattices = Vec::new();
    for (i, &(cells, _)) in octaves.iter().enumerate() {
        let mut rng = rng::stream(seed, &format!("synth.texture.{i}"));
        let n = ((cells + 1) * (cells + 1)) as usize;
        let lattice: Vec<[f32; 3]> = (0..n)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        lattices.push(lattice);
    }
    let mut img = RgbImage::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let mut acc = [0.0f32; 3];
            for (&(cells, weight), lattice) in octaves.iter().zip(&lattices) {
                let fx = x as f32 / width as f32 * cells as f32;
                let fy = y as f32 / height as f32 * cells as f32;
                let (cx, cy) = (fx.floor() as u32, fy.floor() as u32);
                let (tx, ty) = (fx - cx as f32, fy - cy as f32);
                let at = |ix: u32, iy: u32| lattice[(iy * (cells + 1) + ix) as usize];
                let (c00, c10) = (at(cx, cy), at(cx + 1, cy));
                let (c01, c11) = (at(cx, cy + 1), at(cx + 1, cy + 1));
                for ch in 0..3 {
                    let top = c00[ch] * (1.0 - tx) + c10[ch] * tx;
                    let bottom = c01[ch] * (1.0 - tx) + c11[ch] * tx;
                    acc[ch] += weight * (top * (1.0 - ty) + bottom * ty);
                }
            }
            let px = acc.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8);
            img.put_pixel(x, y, image::Rgb(px));
        }
    }
    img
}

/// Crops a window from a larger base image; the window must fit.
pub fn crop(base: &RgbImage, x0: u32, y0: u32, width: u32, height: u32) -> RgbImage {
    assert!(x0 + width <= base.width() && y0 + height <= base.height());
    RgbImage::from_fn(width, height, |x, y| *base.get_pixel(x0 + x, y0 + y))
}

/// Synthesizes a camera pan by sliding a crop window across a textured
/// still. `step` is the per-frame window offset in pixels.
pub fn pan_clip(
    id: &str,
    base: &RgbImage,
    width: u32,
    height: u32,
    frames: usize,
    step: (u32, u32),
) -> VideoClip {
    let span_x = step.0 * (frames as u32 - 1);
    let span_y = step.1 * (frames as u32 - 1);
    assert!(
        width + span_x <= base.width() && height + span_y <= base.height(),
        "pan exceeds base image"
    );
    let frames = (0..frames as u32)
        .map(|t| crop(base, t * step.0, t * step.1, width, height))
        .collect();
    VideoClip::new(id, frames).expect("pan frames share dimensions")
}

/// Copies a frame shifted by (dx, dy); uncovered pixels are edge-clamped.
pub fn translate_frame(frame: &RgbImage, dx: i32, dy: i32) -> RgbImage {
    let (w, h) = frame.dimensions();
    RgbImage::from_fn(w, h, |x, y| {
        let sx = (x as i32 - dx).clamp(0, w as i32 - 1) as u32;
        let sy = (y as i32 - dy).clamp(0, h as i32 - 1) as u32;
        *frame.get_pixel(sx, sy)
    })
}
