//! Frame-matching models and the matching matrices they produce.

pub mod branch;
mod matrix;
mod oracle;
mod persist;
mod siamese;
mod triplet;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use matrix::{MatchingMatrix, Polarity};
pub use oracle::PixelOracle;
pub use persist::{load_matcher, load_metadata, meta_path, save_matcher, ModelMetadata};
pub use siamese::{train_siamese, SiameseModel};
pub use triplet::{train_triplet, triplet_separation, DistanceKind, TripletModel};

use crate::dataset::{ImageFrame, SequencePair};
use crate::error::{Error, Result};
use crate::SEQUENCE_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatcherKind {
    #[serde(rename = "siamese")]
    Siamese,
    #[serde(rename = "triplet-euc")]
    TripletEuc,
    #[serde(rename = "triplet-sim")]
    TripletSim,
    #[serde(rename = "oracle")]
    Oracle,
}

impl MatcherKind {
    pub const ALL: [MatcherKind; 4] = [
        MatcherKind::Siamese,
        MatcherKind::TripletEuc,
        MatcherKind::TripletSim,
        MatcherKind::Oracle,
    ];

    pub fn is_trainable(self) -> bool {
        self != MatcherKind::Oracle
    }

    pub fn distance(self) -> Option<DistanceKind> {
        match self {
            MatcherKind::TripletEuc => Some(DistanceKind::Euclidean),
            MatcherKind::TripletSim => Some(DistanceKind::Cosine),
            _ => None,
        }
    }
}

impl fmt::Display for MatcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatcherKind::Siamese => "siamese",
            MatcherKind::TripletEuc => "triplet-euc",
            MatcherKind::TripletSim => "triplet-sim",
            MatcherKind::Oracle => "oracle",
        })
    }
}

impl FromStr for MatcherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MatcherKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown matcher `{s}` (siamese|triplet-euc|triplet-sim|oracle)"
                ))
            })
    }
}

/// Anything that scores a (left, right) frame pair.
pub trait FrameMatcher: Send + Sync {
    fn kind(&self) -> MatcherKind;

    fn polarity(&self) -> Polarity;

    fn score(&self, left: &ImageFrame, right: &ImageFrame) -> Result<f64>;

    /// Entry (i, j) = `score(left[i], right[j])`.
    fn build_matrix(&self, seq: &SequencePair) -> Result<MatchingMatrix> {
        let scores = (0..SEQUENCE_LEN * SEQUENCE_LEN)
            .into_par_iter()
            .map(|idx| {
                self.score(
                    &seq.left[idx / SEQUENCE_LEN],
                    &seq.right[idx % SEQUENCE_LEN],
                )
            })
            .collect::<Result<Vec<_>>>()?;
        MatchingMatrix::new(scores, self.polarity(), self.kind().to_string())
    }
}

pub fn build_matching_matrix(
    model: &dyn FrameMatcher,
    seq: &SequencePair,
) -> Result<MatchingMatrix> {
    model.build_matrix(seq)
}
