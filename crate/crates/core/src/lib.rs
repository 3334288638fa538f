//! Content-based time synchronization of stereo video sequences.
//!
//! A frame matcher scores every (left, right) frame pair of two 20-frame
//! windows into a 20×20 matching matrix; a delay estimator then reads the
//! signed frame delay off that matrix.

pub mod dataset;
pub mod delay;
pub mod error;
pub mod eval;
pub mod imgproc;
pub mod matchers;
pub mod opticalflow;
pub mod tensorcore;
pub mod training;

pub use dataset::{ImageFrame, LabeledPair, SequencePair, Triplet};
pub use delay::DelayEstimate;
pub use error::{Error, Result};
pub use matchers::{MatchingMatrix, Polarity};
pub use tensorcore::{Graph, ParamSet, Tensor};

/// Frames per sequence window on each side.
pub const SEQUENCE_LEN: usize = 20;
