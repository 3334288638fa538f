//! Frames, pairing rules and sequence desynchronization.

mod io;
mod manifest;
mod pairs;
mod synthetic;

use std::sync::Arc;

pub use io::{list_image_files, load_frames, load_stereo_dir, save_frames, write_frame_png};
pub use manifest::{read_manifest, write_manifest, ManifestRecord, RecordKind, Split};
pub use pairs::{
    make_pairs, make_sequence_pairs, make_triplets, nonmatch_offsets, MAX_NONMATCH_OFFSET,
    MIN_STREAM_FOR_SEQUENCES,
};
pub use synthetic::{render_synthetic_stereo, SceneConfig};

use crate::error::{Error, Result};
use crate::tensorcore::Tensor;
use crate::SEQUENCE_LEN;

/// Default model input resolution (square).
pub const DEFAULT_RESOLUTION: usize = 224;

/// What the matchers see: grayscale frames or encoded optical flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InputKind {
    #[default]
    Raw,
    Flow,
}

impl std::fmt::Display for InputKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InputKind::Raw => "raw",
            InputKind::Flow => "flow",
        })
    }
}

impl std::str::FromStr for InputKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(InputKind::Raw),
            "flow" => Ok(InputKind::Flow),
            other => Err(Error::invalid(format!(
                "unknown input kind `{other}` (raw|flow)"
            ))),
        }
    }
}

/// A grayscale (1 channel) or flow (2 channel) frame with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFrame {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
    index: usize,
}

/// Frames are shared between pairs, triplets and sequences.
pub type FrameRef = Arc<ImageFrame>;

impl ImageFrame {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
        index: usize,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "frame dimensions must be positive, got {width}×{height}"
            )));
        }
        if !(1..=2).contains(&channels) {
            return Err(Error::invalid(format!(
                "frames have 1 or 2 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::shape(
                "image frame",
                format!(
                    "{width}×{height}×{channels} needs {} values, got {}",
                    width * height * channels,
                    data.len()
                ),
            ));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("frame value {bad} outside [0, 1]")));
        }
        Ok(ImageFrame {
            width,
            height,
            channels,
            data,
            index,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    /// Bilinear resize to `width`×`height`; a no-op when the size already matches.
    pub fn resized(&self, width: usize, height: usize) -> ImageFrame {
        let data = crate::imgproc::resize_bilinear(
            &self.data,
            self.width,
            self.height,
            self.channels,
            width,
            height,
        );
        ImageFrame {
            width,
            height,
            channels: self.channels,
            data: data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            index: self.index,
        }
    }

    /// Height × width × channels tensor view of the pixels.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_parts(
            vec![self.height, self.width, self.channels],
            self.data.clone(),
        )
    }

    /// Single channel as a plane.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }
}

/// A left/right frame pair labelled as matching (same instant) or not.
#[derive(Debug, Clone)]
pub struct LabeledPair {
    pub left: FrameRef,
    pub right: FrameRef,
    /// 1 for a match, 0 otherwise.
    pub label: u8,
    /// Right index minus left index.
    pub offset: i32,
    pub left_index: usize,
}

impl LabeledPair {
    pub fn is_consistent(&self) -> bool {
        match self.label {
            1 => self.offset == 0,
            0 => self.offset != 0 && self.offset.unsigned_abs() as usize <= MAX_NONMATCH_OFFSET,
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Triplet {
    pub anchor: FrameRef,
    pub positive: FrameRef,
    pub negative: FrameRef,
    pub anchor_index: usize,
    /// Offset of the negative relative to the anchor instant.
    pub negative_offset: i32,
}

/// Two 20-frame windows with a known signed delay: right frame `j` shows
/// the same instant as left frame `j + true_delay`.
#[derive(Debug, Clone)]
pub struct SequencePair {
    pub left: Vec<FrameRef>,
    pub right: Vec<FrameRef>,
    pub true_delay: i32,
    pub left_start: usize,
    pub right_start: usize,
}

impl SequencePair {
    pub fn new(left: Vec<FrameRef>, right: Vec<FrameRef>, true_delay: i32) -> Result<Self> {
        if left.len() != SEQUENCE_LEN || right.len() != SEQUENCE_LEN {
            return Err(Error::InsufficientData(format!(
                "sequence windows need {SEQUENCE_LEN} frames per side, got {} and {}",
                left.len(),
                right.len()
            )));
        }
        let left_start = left[0].index();
        let right_start = right[0].index();
        Ok(SequencePair {
            left,
            right,
            true_delay,
            left_start,
            right_start,
        })
    }

    /// Number of stream instants seen by both windows.
    pub fn overlap(&self) -> usize {
        SEQUENCE_LEN.saturating_sub(self.true_delay.unsigned_abs() as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_rejects_out_of_range_values() {
        assert!(ImageFrame::new(2, 1, 1, vec![0.0, 1.5], 0).is_err());
        assert!(ImageFrame::new(2, 1, 1, vec![0.0, f64::NAN], 0).is_err());
        assert!(ImageFrame::new(2, 1, 3, vec![0.0; 6], 0).is_err());
        assert!(ImageFrame::new(2, 1, 2, vec![0.5; 4], 0).is_ok());
    }

    #[test]
    fn channel_extraction() {
        let f = ImageFrame::new(2, 1, 2, vec![0.1, 0.2, 0.3, 0.4], 0).unwrap();
        assert_eq!(f.channel(0), vec![0.1, 0.3]);
        assert_eq!(f.channel(1), vec![0.2, 0.4]);
        assert_eq!(f.to_tensor().shape(), &[1, 2, 2]);
    }
}
