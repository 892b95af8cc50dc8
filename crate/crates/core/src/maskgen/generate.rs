//! Blob mask rendering and control-point dynamics.
//!
//! A mask is a polyline of control points drawn with a thick round-capped
//! stroke. The blob drifts with a shared velocity (FG displacement),
//! control points receive random velocity kicks relative to that drift
//! (FG pose motion), and stroke width plus a centroid-distance bound set
//! the blob's extent (FG size). Kicks and inward pulls are mean-centered
//! across the points each frame, so stochasticity reshapes the blob
//! without steering its centroid; relative velocities are damped and
//! capped so shape change stays stationary over long sequences.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{Band, MaskGenConfig};
use super::MaskGenError;
use crate::corpus::{MaskFrame, MaskSequence};
use crate::rng;

#[derive(Debug, Clone)]
struct BlobState {
    /// Control point positions.
    pos: Vec<(f64, f64)>,
    /// Per-point velocity relative to the shared drift.
    rel_vel: Vec<(f64, f64)>,
    /// Shared drift velocity of the whole blob.
    drift: (f64, f64),
}

/// Pixel-space parameters for one sampled mask.
struct Sampled {
    stroke_width: f64,
    max_radius: f64,
    speed: f64,
    perturb_prob: f64,
    perturb_mag: Band,
    inward_accel: f64,
    speed_cap: f64,
    damping: f64,
    n_points: usize,
}

/// Renders a mask sequence for (`config`, `seed`). Deterministic; retries
/// with a nudged stream in the rare case a frame rasterizes empty.
pub fn generate_mask(
    config: &MaskGenConfig,
    seed: u64,
    id: impl Into<String>,
) -> Result<MaskSequence, MaskGenError> {
    config.validate()?;
    let id = id.into();
    const MAX_ATTEMPTS: u32 = 8;
    for attempt in 0..MAX_ATTEMPTS {
        match try_generate(config, seed, attempt) {
            Ok(frames) => {
                let mut seq = MaskSequence::new(id, frames)
                    .map_err(|e| MaskGenError::InvalidConfig(e.to_string()))?;
                seq.seed = Some(seed);
                return Ok(seq);
            }
            Err(MaskGenError::Degenerate { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(MaskGenError::Degenerate {
        attempts: MAX_ATTEMPTS,
    })
}

fn try_generate(
    config: &MaskGenConfig,
    seed: u64,
    attempt: u32,
) -> Result<Vec<MaskFrame>, MaskGenError> {
    let tag = |name: &str| {
        if attempt == 0 {
            format!("maskgen.{name}")
        } else {
            format!("maskgen.{name}.retry{attempt}")
        }
    };
    let params = &config.params;
    let diag = config.diagonal();
    let (w, h) = (config.recipe.width, config.recipe.height);

    // Resolve free settings, then draw pixel-space parameters.
    let mut setup = rng::stream(seed, &tag("setup"));
    let size_high = resolve(config.recipe.fg_size, &mut setup);
    let disp_high = resolve(config.recipe.fg_displacement, &mut setup);
    let pose_high = resolve(config.recipe.fg_pose_motion, &mut setup);

    let perturb = params.perturbation(pose_high);
    let stroke_width = sample_band(params.stroke_width_frac.band(size_high), &mut setup) * diag;
    // Shape dynamics scale with the stroke width so the measured pose
    // motion (which is area-normalized) behaves the same for small and
    // large blobs.
    let sampled = Sampled {
        stroke_width,
        max_radius: sample_band(params.max_radius_frac.band(size_high), &mut setup) * diag,
        speed: sample_band(params.initial_speed_frac.band(disp_high), &mut setup) * diag,
        perturb_prob: perturb.prob,
        perturb_mag: [
            perturb.magnitude_frac[0] * stroke_width,
            perturb.magnitude_frac[1] * stroke_width,
        ],
        inward_accel: params.inward_accel_frac * stroke_width,
        speed_cap: params.relative_speed_cap_frac * stroke_width,
        damping: params.relative_damping,
        n_points: setup.random_range(params.control_points[0]..=params.control_points[1]),
    };
    if sampled.max_radius < sampled.stroke_width / 2.0 {
        return Err(MaskGenError::InvalidConfig(format!(
            "sampled radius {:.1}px below half the sampled stroke width {:.1}px",
            sampled.max_radius, sampled.stroke_width
        )));
    }

    let mut state = initial_state(config, &sampled, &mut rng::stream(seed, &tag("shape")));

    // Shared initial velocity: the whole mask drifts in one direction.
    let mut motion = rng::stream(seed, &tag("motion"));
    let theta = motion.random_range(0.0..std::f64::consts::TAU);
    state.drift = (sampled.speed * theta.cos(), sampled.speed * theta.sin());

    let mut dynamics = rng::stream(seed, &tag("dynamics"));
    let mut frames = Vec::with_capacity(config.length);
    for t in 0..config.length {
        let frame = rasterize(w, h, &state.pos, sampled.stroke_width);
        if frame.area() == 0 {
            return Err(MaskGenError::Degenerate { attempts: 1 });
        }
        frames.push(frame);
        if t + 1 < config.length {
            step(&mut state, &sampled, w, h, &mut dynamics);
        }
    }

    // Blobs tend to drift and unfold over time; reversing half of the
    // sequences balances the temporal direction of that growth.
    let mut reverse = rng::stream(seed, &tag("reverse"));
    if reverse.random_range(0.0..1.0) < params.reversal_prob {
        frames.reverse();
    }
    Ok(frames)
}

fn resolve(choice: super::Choice, rng: &mut ChaCha8Rng) -> bool {
    match choice {
        super::Choice::Low => false,
        super::Choice::High => true,
        super::Choice::Free => rng.random_range(0.0..1.0) < 0.5,
    }
}

fn sample_band(band: Band, rng: &mut ChaCha8Rng) -> f64 {
    if band[0] == band[1] {
        band[0]
    } else {
        rng.random_range(band[0]..band[1])
    }
}

/// Initial shape: a random walk with (reduced) directional momentum, steps
/// scaled to the sampled radius. The walk is confined to the radius around
/// its own centroid and the blob spawns away from the frame edges, so the
/// starting shape is interior and within its size budget.
fn initial_state(config: &MaskGenConfig, sampled: &Sampled, rng: &mut ChaCha8Rng) -> BlobState {
    let (w, h) = (config.recipe.width as f64, config.recipe.height as f64);
    let margin_x = (sampled.max_radius + sampled.stroke_width / 2.0).min(w / 2.0 - 1.0);
    let margin_y = (sampled.max_radius + sampled.stroke_width / 2.0).min(h / 2.0 - 1.0);

    let mut offsets = vec![(0.0f64, 0.0f64)];
    let mut cursor = (0.0f64, 0.0f64);
    let mut theta = rng.random_range(0.0..std::f64::consts::TAU);
    let momentum = config.params.momentum_bias;
    for _ in 1..sampled.n_points {
        let turn = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        theta += turn * (1.0 - momentum);
        let step = rng.random_range(0.35..0.95) * sampled.max_radius;
        cursor = (cursor.0 + step * theta.cos(), cursor.1 + step * theta.sin());
        offsets.push(cursor);
    }
    // Re-center on the walk's centroid and pull outliers inside the radius.
    let n = offsets.len() as f64;
    let center = (
        offsets.iter().map(|o| o.0).sum::<f64>() / n,
        offsets.iter().map(|o| o.1).sum::<f64>() / n,
    );
    for o in &mut offsets {
        let rel = (o.0 - center.0, o.1 - center.1);
        let dist = rel.0.hypot(rel.1);
        let scale = if dist > sampled.max_radius {
            sampled.max_radius / dist
        } else {
            1.0
        };
        *o = (rel.0 * scale, rel.1 * scale);
    }

    let anchor = (
        rng.random_range(margin_x..w - margin_x),
        rng.random_range(margin_y..h - margin_y),
    );
    let pos: Vec<_> = offsets
        .iter()
        .map(|o| {
            (
                (anchor.0 + o.0).clamp(0.0, w - 1.0),
                (anchor.1 + o.1).clamp(0.0, h - 1.0),
            )
        })
        .collect();
    BlobState {
        rel_vel: vec![(0.0, 0.0); pos.len()],
        pos,
        drift: (0.0, 0.0),
    }
}

/// One dynamics step: random velocity kicks, inward pull past the radius,
/// damping and a cap on relative velocities, then drift with cohesive edge
/// bounces.
fn step(state: &mut BlobState, sampled: &Sampled, w: u32, h: u32, rng: &mut ChaCha8Rng) {
    let n = state.pos.len() as f64;

    // Random accelerations plus inward pull, mean-centered so the blob's
    // centroid trajectory is unaffected.
    let mut kicks: Vec<(f64, f64)> = Vec::with_capacity(state.pos.len());
    for _ in 0..state.pos.len() {
        if rng.random_range(0.0..1.0) < sampled.perturb_prob {
            let dir = rng.random_range(0.0..std::f64::consts::TAU);
            let mag = sample_band(sampled.perturb_mag, rng);
            kicks.push((mag * dir.cos(), mag * dir.sin()));
        } else {
            kicks.push((0.0, 0.0));
        }
    }
    let centroid = (
        state.pos.iter().map(|p| p.0).sum::<f64>() / n,
        state.pos.iter().map(|p| p.1).sum::<f64>() / n,
    );
    for (pos, kick) in state.pos.iter().zip(&mut kicks) {
        let dx = centroid.0 - pos.0;
        let dy = centroid.1 - pos.1;
        let dist = dx.hypot(dy);
        if dist > sampled.max_radius {
            kick.0 += sampled.inward_accel * dx / dist;
            kick.1 += sampled.inward_accel * dy / dist;
        }
    }
    let mean_kick = (
        kicks.iter().map(|k| k.0).sum::<f64>() / n,
        kicks.iter().map(|k| k.1).sum::<f64>() / n,
    );
    for (rel, kick) in state.rel_vel.iter_mut().zip(&kicks) {
        rel.0 = (rel.0 + kick.0 - mean_kick.0) * sampled.damping;
        rel.1 = (rel.1 + kick.1 - mean_kick.1) * sampled.damping;
        let mag = rel.0.hypot(rel.1);
        if mag > sampled.speed_cap {
            let scale = sampled.speed_cap / mag;
            rel.0 *= scale;
            rel.1 *= scale;
        }
    }

    for (pos, rel) in state.pos.iter_mut().zip(&state.rel_vel) {
        pos.0 += state.drift.0 + rel.0;
        pos.1 += state.drift.1 + rel.1;
    }

    // The blob bounces off frame edges as a unit: when any point crosses a
    // border, the velocity component flips for the whole blob and the
    // crossing points reflect their positions. This keeps the shape
    // coherent through bounces instead of tearing it apart.
    let (wf, hf) = (w as f64 - 1.0, h as f64 - 1.0);
    let mut flip_x = false;
    let mut flip_y = false;
    for pos in state.pos.iter_mut() {
        flip_x |= reflect(&mut pos.0, wf);
        flip_y |= reflect(&mut pos.1, hf);
    }
    if flip_x {
        state.drift.0 = -state.drift.0;
        for rel in &mut state.rel_vel {
            rel.0 = -rel.0;
        }
    }
    if flip_y {
        state.drift.1 = -state.drift.1;
        for rel in &mut state.rel_vel {
            rel.1 = -rel.1;
        }
    }
}

/// Folds a coordinate back into [0, max]; returns true when it reflected.
fn reflect(pos: &mut f64, max: f64) -> bool {
    let mut hit = false;
    for _ in 0..64 {
        if *pos < 0.0 {
            *pos = -*pos;
            hit = true;
        } else if *pos > max {
            *pos = 2.0 * max - *pos;
            hit = true;
        } else {
            return hit;
        }
    }
    *pos = pos.clamp(0.0, max);
    hit
}

/// Draws the union of capsules (thick segments with round caps) connecting
/// consecutive control points.
fn rasterize(w: u32, h: u32, points: &[(f64, f64)], stroke_width: f64) -> MaskFrame {
    let mut frame = MaskFrame::empty(w, h);
    let radius = stroke_width / 2.0;
    if points.len() == 1 {
        stamp_capsule(&mut frame, points[0], points[0], radius);
    }
    for pair in points.windows(2) {
        stamp_capsule(&mut frame, pair[0], pair[1], radius);
    }
    frame
}

fn stamp_capsule(frame: &mut MaskFrame, a: (f64, f64), b: (f64, f64), radius: f64) {
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    let x0 = ((a.0.min(b.0) - radius).floor() as i64).max(0);
    let x1 = ((a.0.max(b.0) + radius).ceil() as i64).min(w - 1);
    let y0 = ((a.1.min(b.1) - radius).floor() as i64).max(0);
    let y1 = ((a.1.max(b.1) + radius).ceil() as i64).min(h - 1);
    let seg = (b.0 - a.0, b.1 - a.1);
    let seg_len_sq = seg.0 * seg.0 + seg.1 * seg.1;
    let r_sq = radius * radius;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            let rel = (p.0 - a.0, p.1 - a.1);
            let t = if seg_len_sq > 0.0 {
                ((rel.0 * seg.0 + rel.1 * seg.1) / seg_len_sq).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let closest = (a.0 + t * seg.0, a.1 + t * seg.1);
            let d = (p.0 - closest.0, p.1 - closest.1);
            if d.0 * d.0 + d.1 * d.1 <= r_sq {
                frame.set(x as u32, y as u32, 1);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskgen::{MaskGenParams, MaskRecipe};

    fn config(w: u32, h: u32, t: usize) -> MaskGenConfig {
        MaskGenConfig::new(MaskRecipe::free(w, h), t, MaskGenParams::calibrated_default())
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = config(128, 96, 12);
        let a = generate_mask(&cfg, 42, "m").unwrap();
        let b = generate_mask(&cfg, 42, "m").unwrap();
        assert_eq!(a, b);
        let c = generate_mask(&cfg, 43, "m").unwrap();
        assert_ne!(a.frames, c.frames);
    }

    #[test]
    fn every_frame_nonempty() {
        let cfg = config(96, 64, 20);
        for seed in 0..20 {
            let seq = generate_mask(&cfg, seed, format!("m{seed}")).unwrap();
            assert_eq!(seq.len(), 20);
            for (t, frame) in seq.frames.iter().enumerate() {
                assert!(frame.area() > 0, "seed {seed} frame {t} empty");
            }
        }
    }

    #[test]
    fn static_dynamics_freeze_the_mask() {
        let mut params = MaskGenParams::calibrated_default();
        params.initial_speed_frac.low = [0.0, 0.0];
        params.perturbation_low.prob = 0.0;
        params.inward_accel_frac = 0.0;
        let recipe = MaskRecipe {
            width: 120,
            height: 80,
            fg_size: super::super::Choice::Low,
            fg_displacement: super::super::Choice::Low,
            fg_pose_motion: super::super::Choice::Low,
        };
        let cfg = MaskGenConfig::new(recipe, 8, params);
        let seq = generate_mask(&cfg, 5, "static").unwrap();
        for frame in &seq.frames[1..] {
            assert_eq!(frame, &seq.frames[0]);
        }
    }
}
