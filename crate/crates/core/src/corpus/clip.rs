//! Video clips and clip splitting.

use std::path::Path;

use image::RgbImage;

use super::CorpusError;

/// Source clips must fall inside this length band when ingested.
pub const MIN_CLIP_LEN: usize = 45;
pub const MAX_CLIP_LEN: usize = 90;

/// An ordered RGB frame sequence with uniform dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoClip {
    pub id: String,
    pub frames: Vec<RgbImage>,
}

impl VideoClip {
    /// Builds a clip, checking that there is at least one frame and that all
    /// frames share the same dimensions.
    pub fn new(id: impl Into<String>, frames: Vec<RgbImage>) -> Result<Self, CorpusError> {
        let id = id.into();
        let Some(first) = frames.first() else {
            return Err(CorpusError::Validation(format!("clip {id}: no frames")));
        };
        let (w, h) = first.dimensions();
        if w == 0 || h == 0 {
            return Err(CorpusError::Validation(format!(
                "clip {id}: zero-sized frames"
            )));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.dimensions() != (w, h) {
                return Err(CorpusError::Validation(format!(
                    "clip {id}: frame {i} is {:?}, expected {:?}",
                    f.dimensions(),
                    (w, h)
                )));
            }
        }
        Ok(Self { id, frames })
    }

    pub fn width(&self) -> u32 {
        self.frames[0].width()
    }

    pub fn height(&self) -> u32 {
        self.frames[0].height()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Loads a clip from a directory of PNG frames, sorted by file name.
    pub fn load_dir(id: impl Into<String>, dir: &Path) -> Result<Self, CorpusError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| CorpusError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "png"))
            .collect();
        paths.sort();
        let mut frames = Vec::with_capacity(paths.len());
        for p in &paths {
            let img = image::open(p)
                .map_err(|e| CorpusError::Validation(format!("{}: {e}", p.display())))?
                .into_rgb8();
            frames.push(img);
        }
        VideoClip::new(id, frames)
    }

    /// Writes frames as `frame_%05d.png` into `dir`, creating it if needed.
    pub fn save_dir(&self, dir: &Path) -> Result<(), CorpusError> {
        std::fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
        for (i, frame) in self.frames.iter().enumerate() {
            let path = dir.join(format!("frame_{i:05}.png"));
            frame
                .save(&path)
                .map_err(|e| CorpusError::Validation(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// A note about footage that could not be used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitWarning {
    pub video_id: String,
    pub message: String,
}

/// Splits a raw video into contiguous, non-overlapping clips whose lengths
/// lie in `[min_len, max_len]`.
///
/// Policy: cover as many frames as possible using near-equal contiguous
/// segments. When full coverage is feasible, the video is cut into
/// `ceil(T / max_len)` segments whose lengths differ by at most one frame;
/// otherwise the longest coverable prefix is used and the trailing remainder
/// (shorter than `min_len`) is dropped. Videos shorter than `min_len` yield
/// no clips and a warning.
pub fn split_into_clips(
    video: &VideoClip,
    min_len: usize,
    max_len: usize,
) -> Result<(Vec<VideoClip>, Vec<SplitWarning>), CorpusError> {
    if min_len == 0 || min_len > max_len {
        return Err(CorpusError::Validation(format!(
            "bad clip length bounds [{min_len}, {max_len}]"
        )));
    }
    let total = video.len();
    if total < min_len {
        return Ok((
            vec![],
            vec![SplitWarning {
                video_id: video.id.clone(),
                message: format!("{total} frames is below the {min_len}-frame minimum; dropped"),
            }],
        ));
    }

    // Fewest segments that could cover everything without exceeding max_len.
    let mut segments = total.div_ceil(max_len);
    let mut covered = total;
    let mut warnings = Vec::new();
    if covered < segments * min_len {
        // Full coverage infeasible for these bounds; cover the longest prefix.
        segments = total / min_len;
        covered = (segments * max_len).min(total);
        warnings.push(SplitWarning {
            video_id: video.id.clone(),
            message: format!("dropped trailing {} frames", total - covered),
        });
    }

    let base = covered / segments;
    let extra = covered % segments; // first `extra` segments get one more frame
    let mut clips = Vec::with_capacity(segments);
    let mut start = 0;
    for i in 0..segments {
        let len = base + usize::from(i < extra);
        let frames = video.frames[start..start + len].to_vec();
        clips.push(VideoClip::new(format!("{}_{i:03}", video.id), frames)?);
        start += len;
    }
    Ok((clips, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::solid_frame;

    fn video(id: &str, len: usize) -> VideoClip {
        // Encode the frame index in the red channel so coverage checks can
        // compare pixel content, not just counts.
        let frames = (0..len)
            .map(|i| solid_frame(8, 6, [(i % 256) as u8, 0, 0]))
            .collect();
        VideoClip::new(id, frames).unwrap()
    }

    #[test]
    fn exact_fit_yields_one_clip() {
        let (clips, warns) = split_into_clips(&video("v", 90), 45, 90).unwrap();
        assert_eq!(clips.len(), 1);
        assert_eq!(clips[0].len(), 90);
        assert!(warns.is_empty());
    }

    #[test]
    fn hundred_frames_split_evenly() {
        let (clips, _) = split_into_clips(&video("v", 100), 45, 90).unwrap();
        let lens: Vec<_> = clips.iter().map(|c| c.len()).collect();
        assert_eq!(lens, vec![50, 50]);
    }

    #[test]
    fn below_minimum_is_dropped_with_warning() {
        let (clips, warns) = split_into_clips(&video("v", 40), 45, 90).unwrap();
        assert!(clips.is_empty());
        assert_eq!(warns.len(), 1);
        assert_eq!(warns[0].video_id, "v");
    }

    #[test]
    fn lengths_in_bounds_and_prefix_reconstructed() {
        for total in [45, 46, 89, 90, 91, 134, 180, 181, 269, 450] {
            let v = video("v", total);
            let (clips, _) = split_into_clips(&v, 45, 90).unwrap();
            let mut rebuilt = Vec::new();
            for c in &clips {
                assert!((45..=90).contains(&c.len()), "len {} for T={total}", c.len());
                rebuilt.extend(c.frames.iter().cloned());
            }
            // Default bounds always admit full coverage.
            assert_eq!(rebuilt.len(), total);
            assert_eq!(rebuilt, v.frames);
        }
    }

    #[test]
    fn infeasible_full_coverage_drops_remainder() {
        // [45, 46] bounds, 95 frames: two clips cover at most 92 frames.
        let v = video("v", 95);
        let (clips, warns) = split_into_clips(&v, 45, 46).unwrap();
        let covered: usize = clips.iter().map(|c| c.len()).sum();
        assert_eq!(covered, 92);
        assert_eq!(warns.len(), 1);
        for c in &clips {
            assert!((45..=46).contains(&c.len()));
        }
        let rebuilt: Vec<_> = clips.iter().flat_map(|c| c.frames.clone()).collect();
        assert_eq!(rebuilt[..], v.frames[..92]);
    }

    #[test]
    fn frame_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let v = video("v", 3);
        v.save_dir(dir.path()).unwrap();
        let loaded = VideoClip::load_dir("v", dir.path()).unwrap();
        assert_eq!(loaded.frames, v.frames);
    }
}
