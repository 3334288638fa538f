//! CSV manifest: one row per generated pair, triplet or sequence pair.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LabeledPair, SequencePair, Triplet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Pair,
    Triplet,
    Sequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// `left_index`/`right_index` are stream indices (window starts for
/// sequences); `offset` is the pair offset, triplet negative offset or
/// sequence delay; `label` is empty except for pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub kind: RecordKind,
    pub left_index: usize,
    pub right_index: usize,
    pub offset: i32,
    pub label: Option<u8>,
    pub split: Split,
}

impl ManifestRecord {
    pub fn from_pair(p: &LabeledPair, split: Split) -> Self {
        ManifestRecord {
            kind: RecordKind::Pair,
            left_index: p.left.index(),
            right_index: p.right.index(),
            offset: p.offset,
            label: Some(p.label),
            split,
        }
    }

    pub fn from_triplet(t: &Triplet, split: Split) -> Self {
        ManifestRecord {
            kind: RecordKind::Triplet,
            left_index: t.anchor.index(),
            right_index: t.negative.index(),
            offset: t.negative_offset,
            label: None,
            split,
        }
    }

    pub fn from_sequence(s: &SequencePair, split: Split) -> Self {
        ManifestRecord {
            kind: RecordKind::Sequence,
            left_index: s.left_start,
            right_index: s.right_start,
            offset: s.true_delay,
            label: None,
            split,
        }
    }
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|rec| rec.map_err(Error::from))
        .collect()
}
