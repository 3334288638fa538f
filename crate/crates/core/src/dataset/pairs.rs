use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FrameRef, LabeledPair, SequencePair, Triplet};
use crate::delay::{DELAY_MAX, DELAY_MIN, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::SEQUENCE_LEN;

/// Non-matching right frames lie 1..=10 frames away from the left instant.
pub const MAX_NONMATCH_OFFSET: usize = 10;

/// Shortest stream that fits every delay class: one window plus 20 frames of slack.
pub const MIN_STREAM_FOR_SEQUENCES: usize = 2 * SEQUENCE_LEN;

/// The offsets allowed for a non-matching pair: [-10, -1] ∪ [1, 10].
pub fn nonmatch_offsets() -> impl Iterator<Item = i32> {
    let m = MAX_NONMATCH_OFFSET as i32;
    (-m..=m).filter(|&o| o != 0)
}

fn check_streams(left: &[FrameRef], right: &[FrameRef], min: usize) -> Result<usize> {
    if left.len() != right.len() {
        return Err(Error::invalid(format!(
            "left and right streams differ in length ({} vs {})",
            left.len(),
            right.len()
        )));
    }
    if left.len() < min {
        return Err(Error::InsufficientData(format!(
            "streams have {} frames, at least {min} required",
            left.len()
        )));
    }
    Ok(left.len())
}

/// All (left index, offset) pairs whose right frame stays inside the stream.
fn nonmatch_candidates(len: usize) -> Vec<(usize, i32)> {
    (0..len)
        .flat_map(|t| nonmatch_offsets().map(move |o| (t, o)))
        .filter(|&(t, o)| (0..len as i64).contains(&(t as i64 + o as i64)))
        .collect()
}

fn draw<T: Copy>(candidates: &[T], n: usize, what: &str, rng: &mut ChaCha8Rng) -> Result<Vec<T>> {
    if n > candidates.len() {
        return Err(Error::InsufficientData(format!(
            "requested {n} {what} but only {} distinct ones exist",
            candidates.len()
        )));
    }
    Ok(sample(rng, candidates.len(), n)
        .into_iter()
        .map(|i| candidates[i])
        .collect())
}

/// `n_match` aligned pairs followed by `n_nonmatch` offset pairs, drawn
/// without replacement.
pub fn make_pairs(
    left: &[FrameRef],
    right: &[FrameRef],
    n_match: usize,
    n_nonmatch: usize,
    seed: u64,
) -> Result<Vec<LabeledPair>> {
    let len = check_streams(left, right, MAX_NONMATCH_OFFSET + 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let aligned: Vec<usize> = (0..len).collect();
    let mut pairs: Vec<LabeledPair> = draw(&aligned, n_match, "matching pairs", &mut rng)?
        .into_iter()
        .map(|t| LabeledPair {
            left: left[t].clone(),
            right: right[t].clone(),
            label: 1,
            offset: 0,
            left_index: t,
        })
        .collect();
    let candidates = nonmatch_candidates(len);
    for (t, o) in draw(&candidates, n_nonmatch, "non-matching pairs", &mut rng)? {
        pairs.push(LabeledPair {
            left: left[t].clone(),
            right: right[(t as i64 + o as i64) as usize].clone(),
            label: 0,
            offset: o,
            left_index: t,
        });
    }
    Ok(pairs)
}

/// Anchor `left[t]`, positive `right[t]`, negative `right[t+o]`.
pub fn make_triplets(
    left: &[FrameRef],
    right: &[FrameRef],
    n: usize,
    seed: u64,
) -> Result<Vec<Triplet>> {
    let len = check_streams(left, right, MAX_NONMATCH_OFFSET + 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates = nonmatch_candidates(len);
    Ok(draw(&candidates, n, "triplets", &mut rng)?
        .into_iter()
        .map(|(t, o)| Triplet {
            anchor: left[t].clone(),
            positive: right[t].clone(),
            negative: right[(t as i64 + o as i64) as usize].clone(),
            anchor_index: t,
            negative_offset: o,
        })
        .collect())
}

/// Desynchronized window pairs with delays balanced over [-20, 19].
///
/// The left window starts at `t`, the right window at `t + d`, so right
/// frame `j` and left frame `j + d` show the same instant.
pub fn make_sequence_pairs(
    left: &[FrameRef],
    right: &[FrameRef],
    n: usize,
    seed: u64,
) -> Result<Vec<SequencePair>> {
    let len = check_streams(left, right, MIN_STREAM_FOR_SEQUENCES)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delays: Vec<i32> = (0..n)
        .map(|i| DELAY_MIN + (i % NUM_CLASSES) as i32)
        .collect();
    delays.shuffle(&mut rng);
    delays
        .into_iter()
        .map(|d| {
            debug_assert!((DELAY_MIN..=DELAY_MAX).contains(&d));
            let lo = (-d).max(0) as usize;
            let hi = len - SEQUENCE_LEN - d.max(0) as usize;
            let t = rng.gen_range(lo..=hi);
            let r = (t as i64 + d as i64) as usize;
            SequencePair::new(
                left[t..t + SEQUENCE_LEN].to_vec(),
                right[r..r + SEQUENCE_LEN].to_vec(),
                d,
            )
        })
        .collect()
}
